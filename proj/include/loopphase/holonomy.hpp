#pragma once

// Eigenstructure over the phase torus and Berry phases of the dark state.
//
// The loop path rotates the probe and pump phases together:
// phi13 -> phi13 + theta, phi23 -> phi23 + theta. The loop phase is unchanged,
// the reduced Hamiltonian becomes H(theta) = R H(0) R^dagger with
// R = diag(e^{i theta}, e^{i theta}, 1), and its dark state is R |D(0)>, i.e.
// the |1> and |2> amplitudes pick up e^{i theta}.

#include "loopphase/atomcore.hpp"

#include <functional>
#include <string>
#include <vector>

namespace loopphase::holonomy {

using atomcore::cdouble;
using atomcore::Matrix3c;
using atomcore::Vector3c;

struct Magnitudes {
  double omega12 = 1.0;
  double omega23 = 1.0;
  double omega13 = 1.0;

  double norm2() const { return omega12 * omega12 + omega23 * omega23 + omega13 * omega13; }
  void validate() const; ///< finite, non-negative, not all zero
  Magnitudes scaled(double c) const { return {c * omega12, c * omega23, c * omega13}; }
};

struct TorusPoint {
  double u; ///< phi12 + phi23 in [0, 2pi)
  double v; ///< phi13 in [0, 2pi)
};

struct SpectrumSurface {
  int resolution = 0;           ///< points per axis; u_i = 2 pi i / resolution
  Magnitudes magnitudes;
  std::vector<double> sheets[3]; ///< ascending sheets, index v_j * resolution + u_i
  std::vector<TorusPoint> middle_zero_set;  ///< sign changes of the middle sheet along u
  std::vector<TorusPoint> degeneracy_points; ///< grid points where two sheets touch

  double u(int i) const;
  double v(int j) const;
  double at(int sheet, int i, int j) const { return sheets[sheet][static_cast<std::size_t>(j) * resolution + i]; }
};

/// Spectrum of the reduced Hamiltonian over the (u, v) torus with Phi = u - v.
/// Throws ValidationError for resolution < 16.
SpectrumSurface spectrum_surface(const Magnitudes& mags, int resolution, unsigned jobs = 0);

struct ManifoldLoop {
  double offset;                 ///< u - v on this loop
  std::vector<TorusPoint> points; ///< closed polyline, one point per u sample
  int winding_u = 0;
  int winding_v = 0;
};

struct DarkManifold {
  std::vector<ManifoldLoop> loops;
  double min_separation = 0.0; ///< smallest |(u - v)_a - (u - v)_b| on the circle
  bool disjoint = false;
};

/// The two dark-state lines u - v = pi/2 and 3 pi/2 as closed torus loops.
DarkManifold dark_manifold(int resolution);

/// -2 pi (omega23^2 + omega13^2) / sum omega^2, unwrapped.
double berry_phase_closed(const Magnitudes& mags);

/// Dark state of H(theta) along the loop (loop phase pi/2).
Vector3c dark_state_on_path(const Magnitudes& mags, double theta);

/// Reduced Hamiltonian along the loop at loop phase pi/2.
Matrix3c hamiltonian_on_path(const Magnitudes& mags, double theta);

using StateProvider = std::function<Vector3c(double theta)>;

/// -arg prod_k <D(theta_k)|D(theta_{k+1})> over theta_k = 2 pi k / n, closing
/// with the k = 0 state. `reverse` traverses theta_k = -2 pi k / n.
double berry_phase_wilson(const StateProvider& states, int n_samples, bool reverse = false);
double berry_phase_wilson(const Magnitudes& mags, int n_samples, bool reverse = false);

/// i <D|dD/dtheta> by central differences of step h.
double berry_connection(const Magnitudes& mags, double theta, double h = 1e-5);

enum class Ramp { linear, sin_squared };

struct AdiabaticOptions {
  double total_time = 2000.0;
  long n_steps = 200000;
  Ramp ramp = Ramp::linear;
  int wilson_samples = 10000;
  bool keep_norm_drift = false; ///< store the per-step drift series
};

struct BerryResult {
  double gamma_closed = 0.0;       ///< raw closed form
  double gamma_wilson = 0.0;       ///< raw Wilson-loop value in (-pi, pi]
  double accumulated_phase = 0.0;  ///< arg <D(2pi)|psi(T)>
  double dynamical_phase = 0.0;    ///< -int <psi|H|psi> dt
  double adiabatic_fidelity = 0.0; ///< |<D(2pi)|psi(T)>|^2
  int loop_samples = 0;
  bool diabatic = false;           ///< fidelity < 0.99
  double max_norm_drift = 0.0;
  std::vector<double> norm_drift;  ///< filled when keep_norm_drift

  double gamma_closed_mod() const { return atomcore::wrap_2pi(gamma_closed); }
  double gamma_wilson_mod() const { return atomcore::wrap_2pi(gamma_wilson); }
  double accumulated_phase_mod() const { return atomcore::wrap_2pi(accumulated_phase); }
};

/// Fixed-step RK4 integration of i psi' = H(theta(t)) psi from the dark state,
/// renormalizing after every step.
BerryResult adiabatic_evolve(const Magnitudes& mags, const AdiabaticOptions& options = {});

/// Distance between two angles on the circle, in [0, pi].
double circular_distance(double a, double b);

} // namespace loopphase::holonomy
