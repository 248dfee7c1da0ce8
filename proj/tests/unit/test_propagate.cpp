#include "doctest.h"

#include "loopphase/errors.hpp"
#include "loopphase/holonomy.hpp"
#include "loopphase/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace loopphase;
using propagate::LobeKind;
using propagate::Scene;

namespace {

constexpr double pi = std::numbers::pi;

Scene small_scene(int l, double od) {
  Scene s = Scene::reference(l, od);
  s.grid = {96, 96, 300.0, 0.0, 0.0};
  s.jobs = 2;
  return s;
}

// Linear ramp: bilinear interpolation reproduces it exactly, so the ring
// profile is 1 + a cos(theta - angle).
propagate::RealMap tilted_plane(double angle, double amplitude, double radius) {
  propagate::RealMap m{{64, 64, 1.0, 0.0, 0.0}, {}};
  m.values.resize(m.grid.size());
  for (std::size_t j = 0; j < 64; ++j)
    for (std::size_t i = 0; i < 64; ++i)
      m.values[m.grid.index(i, j)] =
          1.0 + amplitude * (m.grid.x(i) * std::cos(angle) + m.grid.y(j) * std::sin(angle)) / radius;
  return m;
}

} // namespace

TEST_SUITE("propagate") {

TEST_CASE("output equals input at the entrance face") {
  const Scene s = small_scene(1, 5.0);
  const auto r = propagate::render(s);
  const auto out0 = propagate::propagate_analytic(r.probe_in, r.pump, s.coupling, s.relax, s.params, 0.0);
  for (std::size_t k = 0; k < out0.values.size(); ++k) CHECK(out0.values[k] == r.probe_in.values[k]);
}

TEST_CASE("attenuation integral is continuous across the series switch") {
  for (double z : {0.5, 1.0, 3.0}) {
    CHECK(propagate::attenuation_integral(0.0, z) == z);
    for (double bz : {1e-12, 0.99e-8, 1.01e-8, 1e-6}) {
      const double b = bz / z;
      CHECK(propagate::attenuation_integral(b, z) == doctest::Approx(-std::expm1(-bz) / b).epsilon(1e-15));
    }
    CHECK(propagate::attenuation_integral(2.0, z) == doctest::Approx((1.0 - std::exp(-2.0 * z)) / 2.0).epsilon(1e-15));
  }
}

TEST_CASE("intensity decomposes into three terms") {
  Scene s = small_scene(1, 3.0);
  s.coupling.phi12 = 0.4;
  const auto r = propagate::render(s);
  const auto terms = propagate::intensity_terms(r.probe_in, r.pump, s.coupling, s.relax, s.params, s.params.length);
  double peak = 0.0, worst = 0.0;
  for (double v : r.intensity_out.values) peak = std::max(peak, v);
  for (std::size_t k = 0; k < r.intensity_out.values.size(); ++k) {
    const double sum = terms.beer_lambert.values[k] + terms.interference.values[k] + terms.scattering.values[k];
    worst = std::max(worst, std::abs(sum - r.intensity_out.values[k]));
  }
  CHECK(worst < 1e-12 * peak);
}

TEST_CASE("reduced phase formula matches the field phases") {
  Scene s = small_scene(2, 2.0);
  s.coupling.phi23 = 1.1;
  const auto r = propagate::render(s);
  const auto formula = propagate::reduced_phase_formula(r.probe_in, r.pump, s.coupling, s.relax, s.params, s.params.length);
  double peak = 0.0;
  for (const auto& v : r.probe_in.values) peak = std::max(peak, std::abs(v));
  for (std::size_t k = 0; k < formula.values.size(); ++k) {
    if (std::abs(r.probe_in.values[k]) < 1e-6 * peak) continue;
    const double direct = std::arg(r.probe_out.values[k] / r.probe_in.values[k]);
    CHECK(holonomy::circular_distance(direct, formula.values[k]) < 1e-10);
  }
}

TEST_CASE("numeric routes agree with the closed form") {
  Scene s = small_scene(1, 4.0);
  s.grid = {24, 24, 300.0, 0.0, 0.0};
  s.coupling.phi12 = 2.0;
  s.params.n_z = 256;
  const auto r = propagate::render(s);
  const auto num = propagate::propagate_numeric(r.probe_in, r.pump, s.coupling, s.relax, s.params, 2);
  const auto ref = propagate::propagate_numeric_reference(r.probe_in, r.pump, s.coupling, s.relax, s.params);
  double scale = 0.0, d1 = 0.0, d2 = 0.0;
  for (std::size_t k = 0; k < r.probe_out.values.size(); ++k) {
    scale = std::max(scale, std::abs(r.probe_out.values[k]));
    d1 = std::max(d1, std::abs(num.field.values[k] - r.probe_out.values[k]));
    d2 = std::max(d2, std::abs(ref.values[k] - r.probe_out.values[k]));
  }
  CHECK(d1 < 1e-9 * scale);
  CHECK(d2 < 1e-9 * scale);
  CHECK_FALSE(num.step_count_too_small);
}

TEST_CASE("too few axial steps are flagged") {
  Scene s = small_scene(1, 20.0);
  s.grid = {16, 16, 300.0, 0.0, 0.0};
  s.params.n_z = 2;
  const auto r = propagate::render(s);
  const auto num = propagate::propagate_numeric(r.probe_in, r.pump, s.coupling, s.relax, s.params);
  CHECK(num.step_count_too_small);
  CHECK(num.step_disagreement > 1e-6);
}

TEST_CASE("lobes of a tilted plane sit at the tilt angle") {
  for (double angle : {0.0, 1.0, 2.9, 5.5}) {
    const auto map = tilted_plane(angle, 0.5, 0.6);
    const auto lobes = propagate::lobe_angles(map, 0.6);
    REQUIRE(lobes.size() == 2);
    for (const auto& l : lobes) {
      const double target = l.kind == LobeKind::max ? angle : angle + pi;
      CHECK(holonomy::circular_distance(l.angle, target) < 1e-4);
    }
    CHECK(propagate::visibility(map, 0.6) == doctest::Approx(0.5).epsilon(1e-4));
  }
}

TEST_CASE("a flat ring has no lobes and zero visibility") {
  const auto map = tilted_plane(0.0, 0.0, 0.6);
  CHECK(propagate::lobe_angles(map, 0.6).empty());
  CHECK(propagate::visibility(map, 0.6) == 0.0);
  propagate::RealMap zero{map.grid, std::vector<double>(map.values.size(), 0.0)};
  CHECK(propagate::visibility(zero, 0.6) == 0.0);
}

TEST_CASE("without the 1-2 coupling the output ring is featureless") {
  Scene s = small_scene(1, 5.0);
  s.coupling.omega12 = 0.0;
  const auto r = propagate::render(s);
  CHECK(propagate::lobe_angles(r.intensity_out, s.ring_radius()).empty());
  CHECK(propagate::visibility(r.intensity_out, s.ring_radius()) == 0.0);
}

TEST_CASE("rings outside the window are rejected") {
  const auto map = tilted_plane(0.0, 0.1, 0.5);
  CHECK_THROWS_AS(propagate::ring_profile(map, 1.2, 360), ValidationError);
  CHECK_NOTHROW(propagate::ring_profile(map, 1.0 - map.grid.dx() / 2.0, 360));
}

TEST_CASE("phase map masks vanishing amplitude") {
  beamlab::ComplexField f({4, 1, 1.0, 0.0, 0.0});
  f.values = {{1.0, 0.0}, {0.0, 0.0}, {-1.0, 0.0}, {0.0, -2.0}};
  const auto p = propagate::phase_map(f);
  CHECK(p.valid == std::vector<std::uint8_t>{1, 0, 1, 1});
  CHECK(p.values[1] == 0.0);
  CHECK(p.values[2] == doctest::Approx(pi));
  CHECK(p.values[3] == doctest::Approx(-pi / 2.0));
}

TEST_CASE("co-rotating pump makes the loop phase uniform") {
  Scene s = small_scene(2, 1.0);
  s.pump_mode.l = 2;
  s.coupling.phi23 = pi / 2.0;
  const auto r = propagate::render(s);
  const auto phi = propagate::loop_phase_map(r.probe_in, r.pump, s.coupling);
  double peak = 0.0;
  for (const auto& v : r.probe_in.values) peak = std::max(peak, std::abs(v));
  for (std::size_t k = 0; k < phi.values.size(); ++k)
    if (std::abs(r.probe_in.values[k]) > 1e-9 * peak)
      CHECK(holonomy::circular_distance(phi.values[k], pi / 2.0) < 1e-12);
}

TEST_CASE("rendering is independent of the worker count") {
  Scene a = small_scene(1, 1.0), b = a;
  a.jobs = 1;
  b.jobs = 5;
  CHECK(propagate::render(a).intensity_out.values == propagate::render(b).intensity_out.values);
}

TEST_CASE("output_at agrees with the sampled field") {
  const Scene s = small_scene(1, 2.0);
  const auto r = propagate::render(s);
  for (std::size_t k : {100u, 4000u, 5000u}) {
    const std::size_t i = k % s.grid.nx, j = k / s.grid.nx;
    CHECK(std::abs(propagate::output_at(s, s.grid.x(i), s.grid.y(j)) - r.probe_out.values[k]) < 1e-14);
  }
}

TEST_CASE("invalid propagation parameters") {
  CHECK_THROWS_AS(propagate::PropagationParams::from_optical_depth(-1.0), ValidationError);
  CHECK_THROWS_AS(propagate::PropagationParams::from_optical_depth(1.0, 1.0, 0), ValidationError);
}

}
