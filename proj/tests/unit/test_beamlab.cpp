#include "doctest.h"

#include "loopphase/beamlab.hpp"
#include "loopphase/errors.hpp"

#include <cmath>
#include <numbers>

using namespace loopphase;
using beamlab::LGModeSpec;

namespace {

// Explicit sum: L_n^a(x) = sum_k (-1)^k binom(n + a, n - k) x^k / k!
double laguerre_sum(int n, double a, double x) {
  double s = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double binom = std::tgamma(n + a + 1.0) / (std::tgamma(n - k + 1.0) * std::tgamma(a + k + 1.0));
    s += ((k % 2) ? -1.0 : 1.0) * binom * std::pow(x, k) / std::tgamma(k + 1.0);
  }
  return s;
}

} // namespace

TEST_SUITE("beamlab") {

TEST_CASE("laguerre recurrence matches the explicit sum") {
  for (int n = 0; n <= 6; ++n)
    for (double a : {0.0, 1.0, 2.0, 3.0})
      for (double x : {0.0, 0.3, 1.7, 4.2, 9.0}) {
        const double ref = laguerre_sum(n, a, x);
        CHECK(beamlab::laguerre(n, a, x) == doctest::Approx(ref).epsilon(1e-12).scale(1.0));
      }
}

TEST_CASE("normalization constant against the factorial formula") {
  for (int l = -4; l <= 4; ++l)
    for (int m = 0; m <= 4; ++m) {
      const double ref =
          std::sqrt(2.0 * std::tgamma(m + 1.0) / (std::numbers::pi * std::tgamma(m + std::abs(l) + 1.0)));
      CHECK(beamlab::normalization_constant(l, m) == doctest::Approx(ref).epsilon(1e-14));
    }
}

TEST_CASE("mode norm is one for any waist") {
  for (int l : {-2, 0, 1, 3})
    for (int m : {0, 1, 2})
      for (double w0 : {0.4, 1.3, 100.0})
        CHECK(std::abs(beamlab::mode_norm({l, m, w0, 0.9, 1.0}) - 1.0) < 1e-8);
}

TEST_CASE("power is conserved off the waist") {
  // Riemann sum of |f|^2 on a fine grid at z = 0 and z = 2 zR.
  const LGModeSpec spec{2, 1, 1.0, 0.5, 1.0};
  for (double z : {0.0, 2.0 * spec.rayleigh_range()}) {
    const double half = 6.0 * spec.waist_at(z);
    const beamlab::GridSpec g{400, 400, half, 0.0, 0.0};
    const auto f = beamlab::sample_field(spec, g, z);
    double p = 0.0;
    for (const auto& v : f.values) p += std::norm(v);
    CHECK(p * g.dx() * g.dy() == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("charge winds the phase") {
  const LGModeSpec spec{3, 1, 1.0, 1.0, 1.0};
  const auto a = beamlab::evaluate_mode(spec, 0.6, 0.2);
  const auto b = beamlab::evaluate_mode(spec, 0.6, 0.7);
  CHECK(std::abs(a) == doctest::Approx(std::abs(b)).epsilon(1e-14));
  const double dphase = std::remainder(std::arg(b) - std::arg(a) - 3.0 * 0.5, 2.0 * std::numbers::pi);
  CHECK(std::abs(dphase) < 1e-12);
}

TEST_CASE("peak radius is the global maximum of the modulus") {
  for (int l : {0, 1, 2, 4})
    for (int m : {0, 1, 2}) {
      const LGModeSpec spec{l, m, 2.0, 1.0, 1.0};
      const double rp = beamlab::peak_radius(spec);
      const double at_peak = std::abs(beamlab::evaluate_mode(spec, rp, 0.0));
      for (int k = 0; k <= 4000; ++k) {
        const double r = 8.0 * k / 4000.0;
        CHECK(std::abs(beamlab::evaluate_mode(spec, r, 0.0)) <= at_peak * (1.0 + 1e-9));
      }
      if (m == 0) CHECK(rp == doctest::Approx(2.0 * std::sqrt(l / 2.0)).epsilon(1e-12));
    }
}

TEST_CASE("peak rabi scaling") {
  const auto spec = beamlab::with_peak_rabi({2, 1, 50.0, 0.78, 1.0}, 0.37);
  CHECK(beamlab::peak_modulus(spec) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("pixel centers are symmetric about the grid center") {
  const beamlab::GridSpec g{8, 8, 2.0, 0.5, -1.0};
  CHECK(g.x(0) == doctest::Approx(0.5 - 1.75));
  CHECK(g.x(7) == doctest::Approx(0.5 + 1.75));
  CHECK(g.y(3) + g.y(4) == doctest::Approx(-2.0));
}

TEST_CASE("sampling does not depend on the worker count") {
  const LGModeSpec spec{1, 1, 1.0, 1.0, 1.0};
  const beamlab::GridSpec g{37, 29, 3.0, 0.0, 0.0};
  const auto a = beamlab::sample_field(spec, g, 0.2, 1);
  const auto b = beamlab::sample_field(spec, g, 0.2, 7);
  CHECK(a.values == b.values);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(LGModeSpec({0, 0, -1.0, 1.0, 1.0}).validate(), ValidationError);
  CHECK_THROWS_AS(LGModeSpec({0, -1, 1.0, 1.0, 1.0}).validate(), ValidationError);
  CHECK_THROWS_AS(LGModeSpec({0, 0, 1.0, 0.0, 1.0}).validate(), ValidationError);
  CHECK_THROWS_AS(beamlab::GridSpec({0, 4, 1.0, 0.0, 0.0}).validate(), ValidationError);
}

}
