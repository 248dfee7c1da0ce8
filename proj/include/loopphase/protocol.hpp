#pragma once

// Three-stage Berry-phase measurement:
//   A. map an unknown pump phase offset c from the bright-lobe angle (l = 1
//      probe, Gaussian pump);
//   B. switch to a pump carrying the probe's vortex, offset so that the loop
//      phase is pi/2 everywhere (whole ensemble in the dark state);
//   C. rotate both beams' phases adiabatically by 2 pi;
//   D. return to the Gaussian pump with the loop phase advanced by the
//      accumulated holonomy and read the lobe rotation.

#include "loopphase/holonomy.hpp"
#include "loopphase/propagate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace loopphase::protocol {

using propagate::Scene;

struct StageMapResult {
  bool found = false;
  double theta_bright = 0.0;
  double c_estimate = 0.0;
  std::vector<propagate::Lobe> lobes;
  std::string diagnostic;
};

/// Stage A. Renders `scene` with c added to the pump phase and returns
/// c_estimate = theta* - pi/2 in [0, 2pi). The probe must carry l = 1 and the
/// pump l = 0.
StageMapResult stage_map(double c, const Scene& scene, const propagate::RingOptions& ring = {});

struct StagePrepareResult {
  Scene scene;                ///< configuration with the vortex pump in place
  double phi_uniformity = 0.0; ///< max |Phi - pi/2| over pixels with both fields present
  double phi_spread = 0.0;     ///< max |Phi - mean Phi|: what is left once the constant offset is removed
  double ring_flatness = 0.0;  ///< (max - min) / max of the exact output intensity on the ring
  bool map_has_extrema = false; ///< lobe detection on the rendered map
  bool dark_state_accepted = false;
  int dark_state_samples = 0;
};

/// Stage B. The pump takes charge `pump_charge` (default: the probe's) and the
/// phase offset pi/2 - c_estimate on top of the unknown c. A charge that
/// differs from the probe's cannot make the loop phase uniform and is rejected.
StagePrepareResult stage_prepare(double c, double c_estimate, const Scene& scene,
                                 const propagate::RingOptions& ring = {},
                                 std::optional<int> pump_charge = std::nullopt);

struct StageLoopResult {
  holonomy::BerryResult berry;
  bool proceed = false;
  std::string diagnostic;
};

/// Stage C. Delegates to adiabatic_evolve; refuses to proceed below fidelity 0.99.
StageLoopResult stage_loop(const holonomy::Magnitudes& mags,
                           const holonomy::AdiabaticOptions& options = {});

struct StageReadoutResult {
  bool found = false;
  double theta_bright = 0.0;
  double fringe_rotation = 0.0; ///< [0, 2pi / l)
  double recovered_gamma = 0.0; ///< [0, 2pi)
  bool resolvable = true;
  std::string diagnostic;
};

/// Stage D. `theta_reference` is the stage-A bright-lobe angle and `gamma` the
/// phase accumulated in stage C.
StageReadoutResult stage_readout(double gamma, double c, double theta_reference, const Scene& scene,
                                 const propagate::RingOptions& ring = {});

struct ProtocolOptions {
  Scene scene = Scene::reference(1, 1.0);
  holonomy::Magnitudes loop_magnitudes{1.0, 1.0, 1.0};
  holonomy::AdiabaticOptions adiabatic{};
  propagate::RingOptions ring{};
};

struct ProtocolReport {
  bool completed = false;
  std::string diagnostic;

  double c = 0.0;
  double c_estimate = 0.0;
  double theta_bright_initial = 0.0;
  double phi_uniformity = 0.0;
  double phi_spread = 0.0;
  double ring_flatness = 0.0;
  bool dark_state_accepted = false;
  holonomy::BerryResult berry;
  double theta_bright_final = 0.0;
  double fringe_rotation = 0.0;
  double recovered_gamma = 0.0;
  double gamma_closed_mod = 0.0;
  double recovery_error = 0.0;   ///< circular distance recovered vs closed form
  double error_bound = 0.0;      ///< phi_uniformity + 2 l angular steps
  bool resolvable = true;
};

/// Stage B must leave Phi spatially uniform (spread <= 1e-6); a constant offset
/// from pi/2, i.e. the stage-A estimation error, is carried into error_bound.
ProtocolReport run_protocol(double c, const ProtocolOptions& options = {});

} // namespace loopphase::protocol
