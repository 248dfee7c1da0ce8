#include "loopphase/protocol.hpp"

#include "loopphase/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace loopphase::protocol {

namespace {

using beamlab::cdouble;

constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2.0 * pi;

std::optional<propagate::Lobe> brightest(const std::vector<propagate::Lobe>& lobes) {
  std::optional<propagate::Lobe> best;
  for (const auto& lobe : lobes)
    if (lobe.kind == propagate::LobeKind::max && (!best || lobe.value > best->value)) best = lobe;
  return best;
}

Scene with_offset(Scene scene, double offset) {
  scene.coupling.phi23 += offset;
  return scene;
}

double angular_step(const propagate::RingOptions& ring) {
  return two_pi / static_cast<double>(ring.n_theta);
}

} // namespace

StageMapResult stage_map(double c, const Scene& scene, const propagate::RingOptions& ring) {
  if (scene.probe_mode.l != 1) throw ValidationError("probe.l", "stage A needs an l = 1 probe");
  if (scene.pump_mode.l != 0) throw ValidationError("pump.l", "stage A needs a Gaussian pump");
  StageMapResult out;
  const Scene s = with_offset(scene, c);
  const auto rendering = propagate::render(s);
  out.lobes = propagate::lobe_angles(rendering.intensity_out, s.ring_radius(), ring);
  const auto bright = brightest(out.lobes);
  if (!bright) {
    out.diagnostic = "no bright lobe on the ring; the offset cannot be estimated";
    return out;
  }
  out.found = true;
  out.theta_bright = bright->angle;
  out.c_estimate = atomcore::wrap_2pi(bright->angle - pi / 2.0);
  return out;
}

StagePrepareResult stage_prepare(double c, double c_estimate, const Scene& scene,
                                 const propagate::RingOptions& ring,
                                 std::optional<int> pump_charge) {
  const int charge = pump_charge.value_or(scene.probe_mode.l);
  if (charge != scene.probe_mode.l)
    throw ValidationError("pump.l", "must match the probe charge for a uniform loop phase");
  StagePrepareResult out;
  out.scene = with_offset(scene, c + pi / 2.0 - c_estimate);
  out.scene.pump_mode.l = charge;
  out.scene.pump_mode.m = scene.probe_mode.m;
  const Scene& s = out.scene;

  const auto rendering = propagate::render(s);
  const auto phases = propagate::loop_phase_map(rendering.probe_in, rendering.pump, s.coupling);
  double peak_probe = 0.0, peak_pump = 0.0;
  for (std::size_t k = 0; k < rendering.probe_in.values.size(); ++k) {
    peak_probe = std::max(peak_probe, std::abs(rendering.probe_in.values[k]));
    peak_pump = std::max(peak_pump, std::abs(rendering.pump.values[k]));
  }
  std::vector<double> present;
  cdouble sum = 0.0;
  for (std::size_t k = 0; k < phases.values.size(); ++k) {
    if (std::abs(rendering.probe_in.values[k]) <= 1e-12 * peak_probe ||
        std::abs(rendering.pump.values[k]) <= 1e-12 * peak_pump)
      continue;
    present.push_back(phases.values[k]);
    sum += std::polar(1.0, phases.values[k]);
    out.phi_uniformity =
        std::max(out.phi_uniformity, holonomy::circular_distance(phases.values[k], pi / 2.0));
  }
  const double mean = std::arg(sum);
  for (double phi : present) out.phi_spread = std::max(out.phi_spread, holonomy::circular_distance(phi, mean));

  // Flatness from the mode functions directly; the map itself carries bilinear ripple.
  const double radius = s.ring_radius();
  double lo = INFINITY, hi = 0.0;
  for (std::size_t k = 0; k < ring.n_theta; ++k) {
    const double theta = two_pi * static_cast<double>(k) / static_cast<double>(ring.n_theta);
    const double intensity = std::norm(propagate::output_at(s, radius * std::cos(theta), radius * std::sin(theta)));
    lo = std::min(lo, intensity);
    hi = std::max(hi, intensity);
  }
  out.ring_flatness = hi > 0.0 ? (hi - lo) / hi : 0.0;
  out.map_has_extrema = !propagate::lobe_angles(rendering.intensity_out, radius, ring).empty();

  // Dark-state acceptance at sampled pixels along the ring.
  out.dark_state_accepted = true;
  for (int k = 0; k < 16; ++k) {
    const double theta = two_pi * k / 16.0;
    const double x = radius * std::cos(theta), y = radius * std::sin(theta);
    const auto probe = beamlab::evaluate_mode(s.scaled_probe(), std::hypot(x, y), std::atan2(y, x));
    const auto pump = beamlab::evaluate_mode(s.scaled_pump(), std::hypot(x, y), std::atan2(y, x));
    atomcore::CouplingConfig local{s.coupling.omega12, std::abs(pump), std::abs(probe),
                                   s.coupling.phi12 + s.coupling.phi23 + std::arg(pump) - std::arg(probe),
                                   0.0, s.coupling.phi13};
    ++out.dark_state_samples;
    try {
      const auto d = atomcore::dark_state(local);
      const double residual = (atomcore::build_hamiltonian_reduced(local) * d).norm();
      if (residual > 1e-12 * std::sqrt(local.omega12 * local.omega12 + local.omega23 * local.omega23 +
                                       local.omega13 * local.omega13))
        out.dark_state_accepted = false;
    } catch (const ValidationError&) {
      out.dark_state_accepted = false;
    }
  }
  return out;
}

StageLoopResult stage_loop(const holonomy::Magnitudes& mags, const holonomy::AdiabaticOptions& options) {
  StageLoopResult out;
  out.berry = holonomy::adiabatic_evolve(mags, options);
  out.proceed = out.berry.adiabatic_fidelity >= 0.99;
  if (!out.proceed)
    out.diagnostic = "diabatic loop: fidelity " + std::to_string(out.berry.adiabatic_fidelity) +
                     " < 0.99; increase the loop time";
  return out;
}

StageReadoutResult stage_readout(double gamma, double c, double theta_reference, const Scene& scene,
                                 const propagate::RingOptions& ring) {
  StageReadoutResult out;
  Scene s = with_offset(scene, c + gamma);
  s.pump_mode.l = 0;
  s.pump_mode.m = 0;
  const int l = std::abs(s.probe_mode.l);
  if (l == 0) throw ValidationError("probe.l", "readout needs a vortex probe");
  const auto rendering = propagate::render(s);
  const auto bright = brightest(propagate::lobe_angles(rendering.intensity_out, s.ring_radius(), ring));
  if (!bright) {
    out.diagnostic = "no bright lobe found at readout";
    return out;
  }
  out.found = true;
  out.theta_bright = bright->angle;
  const double period = two_pi / l;
  out.fringe_rotation = std::fmod(atomcore::wrap_2pi(bright->angle - theta_reference), period);
  out.recovered_gamma = atomcore::wrap_2pi(out.fringe_rotation * l);
  // Rotations below one angular step per lobe cannot be told apart from zero.
  const double step = angular_step(ring);
  if (holonomy::circular_distance(gamma, 0.0) < step * l) {
    out.resolvable = false;
    out.diagnostic = "unresolvable at this resolution";
  }
  return out;
}

ProtocolReport run_protocol(double c, const ProtocolOptions& options) {
  ProtocolReport report;
  report.c = atomcore::wrap_2pi(c);
  report.gamma_closed_mod = atomcore::wrap_2pi(holonomy::berry_phase_closed(options.loop_magnitudes));

  const auto a = stage_map(c, options.scene, options.ring);
  if (!a.found) {
    report.diagnostic = "stage A: " + a.diagnostic;
    return report;
  }
  report.c_estimate = a.c_estimate;
  report.theta_bright_initial = a.theta_bright;

  const auto b = stage_prepare(c, a.c_estimate, options.scene, options.ring);
  report.phi_uniformity = b.phi_uniformity;
  report.phi_spread = b.phi_spread;
  report.ring_flatness = b.ring_flatness;
  report.dark_state_accepted = b.dark_state_accepted;
  const int l = std::abs(options.scene.probe_mode.l);
  report.error_bound = b.phi_uniformity + 2.0 * l * angular_step(options.ring);
  if (b.phi_spread > 1e-6) {
    report.diagnostic = "stage B: loop phase not uniform (spread " + std::to_string(b.phi_spread) + ")";
    return report;
  }

  const auto loop = stage_loop(options.loop_magnitudes, options.adiabatic);
  report.berry = loop.berry;
  if (!loop.proceed) {
    report.diagnostic = "stage C: " + loop.diagnostic;
    return report;
  }

  const auto d = stage_readout(loop.berry.accumulated_phase, c, a.theta_bright, options.scene, options.ring);
  if (!d.found) {
    report.diagnostic = "stage D: " + d.diagnostic;
    return report;
  }
  report.theta_bright_final = d.theta_bright;
  report.fringe_rotation = d.fringe_rotation;
  report.recovered_gamma = d.recovered_gamma;
  report.resolvable = d.resolvable;
  report.recovery_error = holonomy::circular_distance(d.recovered_gamma, report.gamma_closed_mod);
  report.diagnostic = d.diagnostic;
  report.completed = true;
  return report;
}

} // namespace loopphase::protocol
