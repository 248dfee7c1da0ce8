#include "doctest.h"

#include "loopphase/errors.hpp"
#include "loopphase/holonomy.hpp"

#include <cmath>
#include <numbers>

using namespace loopphase;
using holonomy::Magnitudes;
using holonomy::circular_distance;

namespace {

constexpr double pi = std::numbers::pi;

double wilson_error(const Magnitudes& m, int n) {
  return circular_distance(holonomy::berry_phase_wilson(m, n), holonomy::berry_phase_closed(m));
}

} // namespace

TEST_SUITE("holonomy") {

TEST_CASE("closed form for equal magnitudes") {
  CHECK(holonomy::berry_phase_closed({1, 1, 1}) == doctest::Approx(-4.0 * pi / 3.0));
  CHECK(atomcore::wrap_2pi(holonomy::berry_phase_closed({1, 1, 1})) == doctest::Approx(2.0 * pi / 3.0));
  CHECK(holonomy::berry_phase_closed({1, 0, 0}) == 0.0);
}

TEST_CASE("wilson loop matches the closed form") {
  for (const Magnitudes& m : {Magnitudes{1, 1, 1}, Magnitudes{0.3, 2.0, 1.1}, Magnitudes{4.0, 0.5, 0.2}})
    CHECK(wilson_error(m, 10000) < 1e-6);
}

TEST_CASE("reverse traversal negates the phase") {
  const Magnitudes m{0.7, 1.3, 0.9};
  const double fwd = holonomy::berry_phase_wilson(m, 2000);
  const double rev = holonomy::berry_phase_wilson(m, 2000, true);
  CHECK(circular_distance(fwd, -rev) < 1e-12);
}

TEST_CASE("wilson loop is gauge invariant") {
  const Magnitudes m{1.2, 0.8, 0.5};
  const auto plain = [&](double t) { return holonomy::dark_state_on_path(m, t); };
  const auto dressed = [&](double t) {
    return (std::polar(1.0, 3.0 * std::sin(t) + 0.4 * std::cos(2.0 * t)) * holonomy::dark_state_on_path(m, t)).eval();
  };
  CHECK(circular_distance(holonomy::berry_phase_wilson(plain, 500), holonomy::berry_phase_wilson(dressed, 500)) < 1e-10);
}

TEST_CASE("discretization error falls with the sample count") {
  const Magnitudes m{0.6, 1.0, 1.4};
  const double e1 = wilson_error(m, 100), e2 = wilson_error(m, 200), e3 = wilson_error(m, 400);
  CHECK(e2 < e1);
  CHECK(e3 < e2);
  CHECK(e1 < 1e-2);
}

TEST_CASE("berry connection is constant along the loop") {
  const Magnitudes m{0.5, 1.5, 1.0};
  const double a0 = holonomy::berry_connection(m, 0.0);
  for (int k = 1; k < 64; ++k) CHECK(std::abs(holonomy::berry_connection(m, 2.0 * pi * k / 64.0) - a0) < 1e-9);
  CHECK(2.0 * pi * a0 == doctest::Approx(holonomy::berry_phase_closed(m)).epsilon(1e-8));
}

TEST_CASE("phase depends only on magnitude ratios") {
  const Magnitudes m{0.4, 1.7, 0.9};
  for (double c : {1e-3, 0.5, 40.0}) {
    CHECK(holonomy::berry_phase_closed(m.scaled(c)) == doctest::Approx(holonomy::berry_phase_closed(m)).epsilon(1e-14));
    CHECK(circular_distance(holonomy::berry_phase_wilson(m.scaled(c), 1000), holonomy::berry_phase_wilson(m, 1000)) < 1e-12);
  }
}

TEST_CASE("dark state on the path is annihilated by the path hamiltonian") {
  const Magnitudes m{0.8, 0.3, 1.9};
  for (double t : {0.0, 1.0, 4.0}) {
    const auto d = holonomy::dark_state_on_path(m, t);
    CHECK((holonomy::hamiltonian_on_path(m, t) * d).norm() < 1e-14);
    CHECK(d.norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("middle sheet vanishes only on the dark lines") {
  const auto s = holonomy::spectrum_surface({0.1, 5.0, 0.1}, 64, 2);
  REQUIRE_FALSE(s.middle_zero_set.empty());
  const double du = 2.0 * pi / 64.0;
  for (const auto& p : s.middle_zero_set) {
    const double phi = atomcore::wrap_2pi(p.u - p.v);
    CHECK(std::min(circular_distance(phi, pi / 2.0), circular_distance(phi, 3.0 * pi / 2.0)) <= du);
  }
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) {
      CHECK(s.at(0, i, j) <= s.at(1, i, j));
      CHECK(s.at(1, i, j) <= s.at(2, i, j));
    }
}

TEST_CASE("sheets touch for equal magnitudes only") {
  const auto equal = holonomy::spectrum_surface({1, 1, 1}, 64);
  CHECK_FALSE(equal.degeneracy_points.empty());
  for (const auto& p : equal.degeneracy_points) {
    const double phi = atomcore::wrap_2pi(p.u - p.v);
    CHECK(std::min(circular_distance(phi, 0.0), circular_distance(phi, pi)) < 1e-9);
  }
  CHECK(holonomy::spectrum_surface({0.1, 5.0, 0.1}, 64).degeneracy_points.empty());
  CHECK(holonomy::spectrum_surface({1.0, 1.2, 0.8}, 64).degeneracy_points.empty());
}

TEST_CASE("coarse spectra are refused") {
  CHECK_THROWS_AS(holonomy::spectrum_surface({1, 1, 1}, 8), ValidationError);
  CHECK_THROWS_AS(holonomy::spectrum_surface({0, 0, 0}, 32), ValidationError);
}

TEST_CASE("dark manifold is two disjoint (1,1) loops") {
  const auto d = holonomy::dark_manifold(100);
  REQUIRE(d.loops.size() == 2);
  for (const auto& l : d.loops) {
    CHECK(l.winding_u == 1);
    CHECK(l.winding_v == 1);
    CHECK(l.points.size() == 100);
  }
  CHECK(d.disjoint);
  CHECK(d.min_separation == doctest::Approx(pi));
}

TEST_CASE("slow loop follows the dark state and picks up the geometric phase") {
  holonomy::AdiabaticOptions o;
  o.total_time = 500.0;
  o.n_steps = 50000;
  o.ramp = holonomy::Ramp::sin_squared;
  const auto r = holonomy::adiabatic_evolve({1, 1, 1}, o);
  CHECK_FALSE(r.diabatic);
  CHECK(r.adiabatic_fidelity > 0.999);
  CHECK(circular_distance(r.accumulated_phase, r.gamma_closed) < 1e-3);
  CHECK(std::abs(r.dynamical_phase) < 1e-3);
  CHECK(r.max_norm_drift < 1e-12);
}

TEST_CASE("fast loop is flagged diabatic") {
  holonomy::AdiabaticOptions o;
  o.total_time = 1.0;
  o.n_steps = 1000;
  const auto r = holonomy::adiabatic_evolve({1, 1, 1}, o);
  CHECK(r.diabatic);
  CHECK(r.adiabatic_fidelity < 0.99);
}

TEST_CASE("circular distance") {
  CHECK(circular_distance(0.1, 2.0 * pi - 0.1) == doctest::Approx(0.2));
  CHECK(circular_distance(0.0, pi) == doctest::Approx(pi));
  CHECK(circular_distance(-4.0 * pi / 3.0, 2.0 * pi / 3.0) < 1e-12);
}

}
