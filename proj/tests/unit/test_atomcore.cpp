#include "doctest.h"

#include "loopphase/atomcore.hpp"
#include "loopphase/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace loopphase;
using atomcore::CouplingConfig;
using atomcore::RelaxationConfig;

namespace {

constexpr double pi = std::numbers::pi;

CouplingConfig random_coupling(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.0, 3.0), ph(0.0, 2.0 * pi);
  return {mag(rng), mag(rng), mag(rng), ph(rng), ph(rng), ph(rng)};
}

} // namespace

TEST_SUITE("atomcore") {

TEST_CASE("wrapping") {
  CHECK(atomcore::wrap_2pi(-0.5) == doctest::Approx(2.0 * pi - 0.5));
  CHECK(atomcore::wrap_2pi(2.0 * pi) == 0.0);
  CHECK(atomcore::wrap_pi(-pi) == doctest::Approx(pi));
  CHECK(atomcore::wrap_pi(3.0 * pi / 2.0) == doctest::Approx(-pi / 2.0));
}

TEST_CASE("hamiltonians are hermitian") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 50; ++k) {
    const auto c = random_coupling(rng);
    const auto h = atomcore::build_hamiltonian_reduced(c);
    const auto f = atomcore::build_hamiltonian_full(c);
    CHECK((h - h.adjoint()).norm() < 1e-15);
    CHECK((f - f.adjoint()).norm() < 1e-15);
  }
}

TEST_CASE("cubic roots match a dense eigensolver") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 500; ++k) {
    const auto c = random_coupling(rng);
    const auto roots = atomcore::eigen_spectrum(c);
    Eigen::SelfAdjointEigenSolver<atomcore::Matrix3c> es(atomcore::build_hamiltonian_reduced(c));
    const double scale = std::max(1.0, std::sqrt(c.omega12 * c.omega12 + c.omega23 * c.omega23 + c.omega13 * c.omega13));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(roots[i] - es.eigenvalues()[i]) < 1e-12 * scale);
    CHECK(std::is_sorted(roots.begin(), roots.end()));
    for (double r : roots) CHECK(atomcore::characteristic_residual(c, r) < 1e-13);
  }
}

TEST_CASE("equal magnitudes at Phi = 0 give an exact double root") {
  const auto c = CouplingConfig::with_loop_phase(1.0, 1.0, 1.0, 0.0);
  const auto r = atomcore::eigen_spectrum(c);
  CHECK(r[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(r[1] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(r[2] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("gauge-invariant spectrum depends only on the loop phase") {
  const CouplingConfig a{0.7, 1.1, 0.4, 0.3, 1.2, 0.5};
  CouplingConfig b = a;
  b.phi12 += 0.9;
  b.phi13 += 0.9;
  const auto ra = atomcore::eigen_spectrum(a), rb = atomcore::eigen_spectrum(b);
  for (int i = 0; i < 3; ++i) CHECK(ra[i] == doctest::Approx(rb[i]).epsilon(1e-13));
}

TEST_CASE("dark state is a normalized zero mode") {
  for (double phase : {pi / 2.0, 3.0 * pi / 2.0}) {
    const auto c = CouplingConfig::with_loop_phase(0.3, 2.0, 1.4, phase);
    const auto d = atomcore::dark_state(c);
    CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((atomcore::build_hamiltonian_reduced(c) * d).norm() < 1e-14);
    CHECK(std::abs(d(2).imag()) == 0.0);
    CHECK(d(2).real() >= 0.0);
  }
  CHECK_THROWS_AS(atomcore::dark_state(CouplingConfig::with_loop_phase(1, 1, 1, 0.3)), ValidationError);
}

TEST_CASE("bloch right-hand side keeps trace and hermiticity") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    atomcore::Matrix3c rho;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rho(i, j) = {u(rng), u(rng)};
    rho = (rho * rho.adjoint()).eval();
    rho /= rho.trace();
    const auto d = atomcore::bloch_rhs(rho, random_coupling(rng), RelaxationConfig{});
    CHECK(std::abs(d.trace()) < 1e-13);
    CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("steady state agrees with long time integration") {
  const CouplingConfig c{0.4, 1.5, 0.3, 0.2, 0.9, 0.4};
  const auto relax = RelaxationConfig::with_gamma12(0.05);
  const auto ss = atomcore::steady_state(c, relax);
  CHECK(std::abs(ss.trace() - 1.0) < 1e-13);
  CHECK(ss.hermiticity_error() < 1e-13);
  CHECK(ss.min_eigenvalue() > -1e-12);
  CHECK(atomcore::bloch_rhs(ss.rho, c, relax).cwiseAbs().maxCoeff() < 1e-12);

  atomcore::Matrix3c rho = atomcore::DensityMatrix::ground().rho;
  const double h = 0.01;
  for (int n = 0; n < 60000; ++n) {
    const auto k1 = atomcore::bloch_rhs(rho, c, relax);
    const auto k2 = atomcore::bloch_rhs(rho + 0.5 * h * k1, c, relax);
    const auto k3 = atomcore::bloch_rhs(rho + 0.5 * h * k2, c, relax);
    const auto k4 = atomcore::bloch_rhs(rho + h * k3, c, relax);
    rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  CHECK((rho - ss.rho).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("no fields leaves the atom in the ground state") {
  const auto ss = atomcore::steady_state({0, 0, 0, 0, 0, 0}, RelaxationConfig{});
  CHECK((ss.rho - atomcore::DensityMatrix::ground().rho).norm() < 1e-15);
}

TEST_CASE("weak probe formula is the small-probe limit of the steady state") {
  for (double phase : {0.0, 1.0, 2.5, 4.0}) {
    double prev = INFINITY;
    // Both weak fields shrink together; the formula is first order in each.
    for (double w : {0.1, 0.03, 0.01, 0.003}) {
      const auto c = CouplingConfig::with_loop_phase(w, 5.0, w, phase);
      const RelaxationConfig relax;
      const auto exact = atomcore::probe_coherence(atomcore::steady_state(c, relax));
      const double err = std::abs(exact - atomcore::weak_probe_coherence(c, relax)) / std::abs(exact);
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev < 2e-3);
  }
}

TEST_CASE("complex probe overload matches the magnitude form") {
  const CouplingConfig c{0.2, 3.0, 0.15, 0.0, 0.7, 0.0};
  const RelaxationConfig relax;
  CHECK(std::abs(atomcore::weak_probe_coherence(atomcore::cdouble(0.15, 0.0), c, relax) -
                 atomcore::weak_probe_coherence(c, relax)) < 1e-15);
}

TEST_CASE("relaxation validation") {
  RelaxationConfig r;
  r.gamma12 = -1.0;
  CHECK_THROWS_AS(r.validate(), ValidationError);
  CHECK_FALSE(RelaxationConfig::with_gamma12(0.5).advisories().empty());
  CHECK(RelaxationConfig{}.advisories().empty());
}

}
