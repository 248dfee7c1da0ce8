#pragma once

// Weak-probe propagation of a structured probe through the closed-loop medium.
//
// Fields are stored relative to the probe's constant reference phase phi13, so
// the input field is the sampled LG mode itself and the output is
//
//   Omega13(z) = Omega13(0) e^{-beta z} + i q alpha Omega12 Omega23(x,y) g(z) / (gamma13 Gamma_eff)
//
// with q = e^{i(phi12 + phi23 - phi13)}, g(z) = (1 - e^{-beta z}) / beta and
// beta = alpha gamma12 / (gamma13 Gamma_eff). Gamma_eff depends on the local
// pump modulus, so beta and delta vary across the grid.

#include "loopphase/atomcore.hpp"
#include "loopphase/beamlab.hpp"

#include <cstdint>
#include <vector>

namespace loopphase::propagate {

using atomcore::CouplingConfig;
using atomcore::RelaxationConfig;
using beamlab::cdouble;
using beamlab::ComplexField;
using beamlab::GridSpec;

struct PropagationParams {
  double alpha = 1.0;  ///< resonant optical depth per unit length
  double length = 1.0; ///< medium length L
  int n_z = 1024;      ///< axial steps for the numerical route

  double optical_depth() const { return alpha * length; }
  void validate() const;
  static PropagationParams from_optical_depth(double od, double length = 1.0, int n_z = 1024);
};

struct PropagationCoefficients {
  double beta;  ///< amplitude decay rate
  double delta; ///< source amplitude (radially dependent through Omega23)
};

/// beta = alpha gamma12 / (gamma13 Gamma_eff), delta = alpha Omega12 Omega23 / (gamma13 Gamma_eff),
/// evaluated for the local pump modulus `local.omega23`.
PropagationCoefficients coefficients(const CouplingConfig& local, const RelaxationConfig& relax,
                                     const PropagationParams& params);

/// (1 - e^{-beta z}) / beta, switching to its Taylor series for beta z < 1e-8.
double attenuation_integral(double beta, double z);

struct RealMap {
  GridSpec grid;
  std::vector<double> values;
};

using IntensityMap = RealMap;

struct PhaseMap {
  GridSpec grid;
  std::vector<double> values;  ///< radians in (-pi, pi]
  std::vector<std::uint8_t> valid; ///< 0 where the amplitude vanishes (phase set to 0)
};

/// Analytic solution at position z (0 <= z <= L). `coupling` supplies Omega12
/// and the three constant phase offsets; the Rabi magnitudes of the probe and
/// pump come from the fields. `jobs` is a parallelism hint.
ComplexField propagate_analytic(const ComplexField& probe, const ComplexField& pump,
                                const CouplingConfig& coupling, const RelaxationConfig& relax,
                                const PropagationParams& params, double z, unsigned jobs = 0);

struct NumericPropagation {
  ComplexField field;
  double step_disagreement = 0.0; ///< max |u(n_z) - u(2 n_z)| / max |u(2 n_z)|
  bool step_count_too_small = false; ///< step_disagreement > 1e-6
};

/// Fixed-step RK4 integration of dOmega13/dz = i alpha rho13 to z = L, using
/// the SIMD kernels with per-pixel coefficients taken from the weak-probe
/// coherence. Also runs a 2 n_z pass to estimate the step error.
NumericPropagation propagate_numeric(const ComplexField& probe, const ComplexField& pump,
                                     const CouplingConfig& coupling, const RelaxationConfig& relax,
                                     const PropagationParams& params, unsigned jobs = 0);

/// Scalar reference route: per pixel RK4 in the reduced frame that calls
/// atomcore::weak_probe_coherence at every substep. Slow; used as an oracle.
ComplexField propagate_numeric_reference(const ComplexField& probe, const ComplexField& pump,
                                         const CouplingConfig& coupling,
                                         const RelaxationConfig& relax,
                                         const PropagationParams& params);

IntensityMap intensity_map(const ComplexField& field);
PhaseMap phase_map(const ComplexField& field);

/// Loop phase Phi(x, y) = phi12 + phi23 - phi13 + arg(pump) - arg(probe), in [0, 2pi).
RealMap loop_phase_map(const ComplexField& probe, const ComplexField& pump,
                       const CouplingConfig& coupling);

/// The three contributions to the output intensity: Beer-Lambert absorption,
/// loop-phase interference and phase-independent scattering.
struct IntensityTerms {
  RealMap beer_lambert;
  RealMap interference;
  RealMap scattering;
};

IntensityTerms intensity_terms(const ComplexField& probe, const ComplexField& pump,
                               const CouplingConfig& coupling, const RelaxationConfig& relax,
                               const PropagationParams& params, double z);

/// Output phase relative to the input probe phase from the closed form
/// atan2(S cos Phi, A e^{-beta z} - S sin Phi).
RealMap reduced_phase_formula(const ComplexField& probe, const ComplexField& pump,
                              const CouplingConfig& coupling, const RelaxationConfig& relax,
                              const PropagationParams& params, double z);

// -- lobe analysis ---------------------------------------------------------

enum class LobeKind { max, min };

struct Lobe {
  double angle; ///< [0, 2pi)
  LobeKind kind;
  double value;
};

struct RingOptions {
  std::size_t n_theta = 720;
  double noise_floor = 1e-9; ///< relative to the ring's peak value
};

/// Intensity along the circle of `radius` about the grid center, by bilinear
/// interpolation at angles 2 pi k / n_theta.
std::vector<double> ring_profile(const RealMap& map, double radius, std::size_t n_theta);

/// Upper bound on the bilinear interpolation error along the ring, from the
/// discrete second differences of the map.
double ring_interpolation_error(const RealMap& map, double radius, std::size_t n_theta);

/// Extrema of the ring profile after removing max/min pairs whose contrast is
/// below max(noise_floor * peak, 2 * interpolation error). Angles are refined
/// by a least-squares quadratic over the samples around each extremum: up to
/// n_theta / 48 on either side, never more than a quarter of the gap to the
/// neighbouring extrema.
std::vector<Lobe> lobe_angles(const RealMap& map, double radius, const RingOptions& options = {});

/// (Imax - Imin) / (Imax + Imin) along the ring; 0 for a zero ring or when the
/// modulation is below the resolution floor used by lobe_angles.
double visibility(const RealMap& map, double radius, const RingOptions& options = {});

// -- scenes ----------------------------------------------------------------

/// A probe/pump configuration rendered onto a grid. Rabi values are peak
/// values: the LG amplitudes are scaled so that max |Omega| equals them.
struct Scene {
  beamlab::LGModeSpec probe_mode{1, 0, 100.0, 0.78, 1.0};
  beamlab::LGModeSpec pump_mode{0, 0, 100.0, 0.78, 1.0};
  double probe_rabi = 0.1;
  double pump_rabi = 5.0;
  CouplingConfig coupling{0.1, 5.0, 0.1, 0.0, 0.0, 0.0};
  RelaxationConfig relax{};
  PropagationParams params{};
  GridSpec grid{512, 512, 300.0, 0.0, 0.0};
  double plane_z = 0.0; ///< axial plane at which both modes are evaluated
  unsigned jobs = 0;

  /// Reference configuration: Omega13 = Omega12 = 0.1, Omega23 = 5,
  /// w0 = 100, phi12 + phi23 = 0, 512^2 grid over +-3 w0.
  static Scene reference(int l, double optical_depth);

  void validate() const;
  beamlab::LGModeSpec scaled_probe() const;
  beamlab::LGModeSpec scaled_pump() const;
  /// w0 sqrt(|l| / 2): the input probe's intensity maximum for m = 0.
  double ring_radius() const;
};

struct Rendering {
  ComplexField probe_in;
  ComplexField pump;
  ComplexField probe_out;
  IntensityMap intensity_in;
  IntensityMap intensity_out;
  PhaseMap phase_in;
  PhaseMap phase_out;
  double input_peak_intensity = 0.0;
};

/// Samples both beams and propagates analytically to z = L.
Rendering render(const Scene& scene);

/// Copy of `map` divided by `peak` (no-op for a zero peak).
RealMap normalized(const RealMap& map, double peak);

/// Output amplitude at one transverse point, evaluated from the mode functions
/// directly (no grid). Used for exact ring checks.
cdouble output_at(const Scene& scene, double x, double y);

} // namespace loopphase::propagate
