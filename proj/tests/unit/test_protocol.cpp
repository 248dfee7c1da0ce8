#include "doctest.h"

#include "loopphase/errors.hpp"
#include "loopphase/protocol.hpp"

#include <cmath>
#include <numbers>

using namespace loopphase;
using holonomy::circular_distance;
using protocol::Scene;

namespace {

constexpr double pi = std::numbers::pi;

Scene scene() {
  Scene s = Scene::reference(1, 1.0);
  s.grid = {256, 256, 300.0, 0.0, 0.0};
  return s;
}

} // namespace

TEST_SUITE("protocol") {

TEST_CASE("stage A recovers the pump offset") {
  const double step = 2.0 * pi / 720.0;
  for (double c : {0.0, 0.5, 2.0, 4.4}) {
    const auto a = protocol::stage_map(c, scene());
    REQUIRE(a.found);
    CHECK(circular_distance(a.c_estimate, c) < 2.0 * step);
  }
}

TEST_CASE("stage A needs a vortex probe and a gaussian pump") {
  Scene s = scene();
  s.pump_mode.l = 1;
  CHECK_THROWS_AS(protocol::stage_map(0.0, s), ValidationError);
  s = scene();
  s.probe_mode.l = 2;
  CHECK_THROWS_AS(protocol::stage_map(0.0, s), ValidationError);
}

TEST_CASE("stage A without the 1-2 coupling finds nothing") {
  Scene s = scene();
  s.coupling.omega12 = 0.0;
  const auto a = protocol::stage_map(0.3, s);
  CHECK_FALSE(a.found);
  CHECK_FALSE(a.diagnostic.empty());
}

TEST_CASE("stage B puts the ring in the dark state") {
  const double c = 1.3;
  const auto a = protocol::stage_map(c, scene());
  const auto b = protocol::stage_prepare(c, a.c_estimate, scene());
  // The residual is the stage-A estimation error, not a rendering artifact.
  CHECK(b.phi_uniformity == doctest::Approx(circular_distance(a.c_estimate, c)).epsilon(1e-9));
  const auto exact = protocol::stage_prepare(c, c, scene());
  CHECK(exact.phi_uniformity < 1e-12);
  CHECK(exact.ring_flatness < 1e-12);
  CHECK(exact.dark_state_accepted);
  CHECK(exact.dark_state_samples == 16);
}

TEST_CASE("stage B rejects a mismatched pump charge") {
  CHECK_THROWS_AS(protocol::stage_prepare(0.0, 0.0, scene(), {}, 2), ValidationError);
  CHECK_NOTHROW(protocol::stage_prepare(0.0, 0.0, scene(), {}, 1));
}

TEST_CASE("stage C refuses a diabatic loop") {
  holonomy::AdiabaticOptions fast;
  fast.total_time = 1.0;
  fast.n_steps = 1000;
  const auto c = protocol::stage_loop({1, 1, 1}, fast);
  CHECK_FALSE(c.proceed);
  CHECK(c.diagnostic.find("diabatic") != std::string::npos);

  protocol::ProtocolOptions o;
  o.scene = scene();
  o.adiabatic = fast;
  const auto r = protocol::run_protocol(0.4, o);
  CHECK_FALSE(r.completed);
  CHECK(r.diagnostic.rfind("stage C", 0) == 0);
}

TEST_CASE("stage D reads a known phase back") {
  const double c = 0.9;
  const auto a = protocol::stage_map(c, scene());
  REQUIRE(a.found);
  for (double gamma : {0.5, 2.0 * pi / 3.0, 4.0}) {
    const auto d = protocol::stage_readout(gamma, c, a.theta_bright, scene());
    REQUIRE(d.found);
    CHECK(d.resolvable);
    CHECK(circular_distance(d.recovered_gamma, gamma) < 4.0 * 2.0 * pi / 720.0);
  }
}

TEST_CASE("stage D flags rotations below one angular step") {
  const auto a = protocol::stage_map(0.0, scene());
  const auto d = protocol::stage_readout(1e-4, 0.0, a.theta_bright, scene());
  CHECK_FALSE(d.resolvable);
  CHECK(d.diagnostic == "unresolvable at this resolution");
}

TEST_CASE("stages compose to the closed form with exact inputs") {
  holonomy::AdiabaticOptions o;
  o.total_time = 500.0;
  o.n_steps = 50000;
  o.ramp = holonomy::Ramp::sin_squared;
  const double c = 2.2;
  const auto a = protocol::stage_map(c, scene());
  for (const holonomy::Magnitudes& m : {holonomy::Magnitudes{1, 1, 1}, holonomy::Magnitudes{0.25, 1, 1},
                                        holonomy::Magnitudes{1, 4, 1}, holonomy::Magnitudes{1, 1, 0.25}}) {
    const auto b = protocol::stage_prepare(c, c, scene());
    CHECK(b.phi_uniformity < 1e-6);
    const auto loop = protocol::stage_loop(m, o);
    REQUIRE(loop.proceed);
    const auto d = protocol::stage_readout(loop.berry.accumulated_phase, c, a.theta_bright, scene());
    REQUIRE(d.found);
    const double closed = atomcore::wrap_2pi(holonomy::berry_phase_closed(m));
    CHECK(circular_distance(d.recovered_gamma, closed) < 2.0 * pi / 180.0 + 2.0 * pi / 720.0);
  }
}

TEST_CASE("a flat stage-B ring shows no lobes") {
  CHECK_FALSE(protocol::stage_prepare(0.7, 0.7, scene()).map_has_extrema);
}

TEST_CASE("without the 1-2 coupling the loop phase vanishes") {
  holonomy::AdiabaticOptions o;
  o.total_time = 500.0;
  o.n_steps = 50000;
  const auto loop = protocol::stage_loop({0.0, 1.0, 1.0}, o);
  REQUIRE(loop.proceed);
  CHECK(circular_distance(loop.berry.accumulated_phase, 0.0) < 1e-2);
}

TEST_CASE("a stage-A offset widens the error bound without stopping the protocol") {
  for (double eps : {1e-3, 1e-2}) {
    const auto b = protocol::stage_prepare(1.0, 1.0 + eps, scene());
    CHECK(b.phi_uniformity == doctest::Approx(eps).epsilon(1e-9));
    CHECK(b.phi_spread < 1e-12);
  }
  protocol::ProtocolOptions o;
  o.scene = scene();
  const auto r = protocol::run_protocol(0.5, o);
  CHECK(r.completed);
  CHECK(r.error_bound >= r.phi_uniformity);
  CHECK(r.recovery_error <= r.error_bound);
}

TEST_CASE("a pump charge mismatch is caught before it reaches the uniformity check") {
  Scene s = scene();
  s.probe_mode.l = 2;
  CHECK_THROWS_AS(protocol::stage_prepare(0.0, 0.0, s, {}, 1), ValidationError);
}

}
