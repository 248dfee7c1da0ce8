#pragma once

// Closed-loop three-level atom: Hamiltonians, spectrum, dark states and the
// optical Bloch equations. Basis ordering is (|1>, |2>, |3>) throughout and all
// rates and Rabi frequencies are in units of gamma13.

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace loopphase::atomcore {

using cdouble = std::complex<double>;
using Matrix3c = Eigen::Matrix3cd;
using Vector3c = Eigen::Vector3cd;

/// Wraps an angle into [0, 2pi).
double wrap_2pi(double angle);
/// Wraps an angle into (-pi, pi].
double wrap_pi(double angle);

struct CouplingConfig {
  double omega12 = 0.0;
  double omega23 = 0.0;
  double omega13 = 0.0;
  double phi12 = 0.0;
  double phi23 = 0.0;
  double phi13 = 0.0;

  /// Gauge-invariant loop phase phi12 + phi23 - phi13 in [0, 2pi).
  double loop_phase() const { return wrap_2pi(phi12 + phi23 - phi13); }
  void validate() const;

  /// Same magnitudes, phases chosen so that loop_phase() == phase.
  static CouplingConfig with_loop_phase(double omega12, double omega23, double omega13,
                                        double phase);
};

struct RelaxationConfig {
  double Gamma = 0.5;    ///< decay |3> -> |1> and |3> -> |2>, each
  double gamma12 = 1e-3;
  double gamma13 = 1.0;
  double gamma23 = (1.0 + 1e-3) / 2.0;

  /// Defaults with gamma23 = (gamma13 + gamma12) / 2 tied to the given gamma12.
  static RelaxationConfig with_gamma12(double gamma12);

  void validate() const;
  /// Non-fatal advisories (e.g. gamma12 not much smaller than gamma13).
  std::vector<std::string> advisories() const;
};

/// gamma12 + omega23^2 / gamma13: the effective width entering the weak-probe
/// coherence. Distinct from RelaxationConfig::Gamma.
struct EffectiveWidth {
  double value;

  static EffectiveWidth of(double omega23, const RelaxationConfig& relax) {
    return {relax.gamma12 + omega23 * omega23 / relax.gamma13};
  }
};

struct DensityMatrix {
  Matrix3c rho = Matrix3c::Zero();

  static DensityMatrix ground() {
    DensityMatrix d;
    d.rho(0, 0) = 1.0;
    return d;
  }

  cdouble operator()(int i, int j) const { return rho(i, j); }
  cdouble trace() const { return rho.trace(); }
  double hermiticity_error() const { return (rho - rho.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const;
};

Matrix3c build_hamiltonian_full(const CouplingConfig& config);
Matrix3c build_hamiltonian_reduced(const CouplingConfig& config);

/// Roots of Lambda^3 - p Lambda - q = 0 with p = sum Omega^2 and
/// q = 2 Omega12 Omega23 Omega13 cos(Phi), ascending.
std::array<double, 3> eigen_spectrum(const CouplingConfig& config);

/// |Lambda^3 - p Lambda - q| scaled by max(p^{3/2}, |q|).
double characteristic_residual(const CouplingConfig& config, double lambda);

/// Zero-energy eigenvector of the reduced Hamiltonian. Requires
/// |cos(Phi)| <= 1e-9. The |3> amplitude is real and non-negative.
Vector3c dark_state(const CouplingConfig& config);

/// Time derivative of rho as written in the closed-loop Bloch equations
/// (gauge-reduced frame). rho33' follows from trace conservation and the
/// lower triangle from hermiticity.
Matrix3c bloch_rhs(const Matrix3c& rho, const CouplingConfig& config,
                   const RelaxationConfig& relax);

/// Stationary solution of bloch_rhs with unit trace, by dense LU on the eight
/// real unknowns (rho11, rho22, Re/Im rho12, rho13, rho23). A rank-deficient
/// system with every field off resolves to diag(1, 0, 0); any other singular
/// system throws NumericalError.
DensityMatrix steady_state(const CouplingConfig& config, const RelaxationConfig& relax);

/// Closed-form weak-probe coherence
///   rho13 = [i gamma12 Omega13 + Omega12 Omega23 e^{i Phi}] / (gamma13 Gamma_eff).
cdouble weak_probe_coherence(const CouplingConfig& config, const RelaxationConfig& relax);

/// Same expression with a complex probe amplitude measured in the reduced
/// frame (used while the probe evolves along the medium).
cdouble weak_probe_coherence(cdouble probe, const CouplingConfig& config,
                             const RelaxationConfig& relax);

/// Warning text when the probe is not weak relative to the pump.
std::optional<std::string> weak_probe_advisory(const CouplingConfig& config);

/// The 1-3 coherence in the sign convention of the weak-probe formula.
///
/// The Bloch equations evolve rho under -H' (they read i[H', rho] + relaxation).
/// After the basis change |3> -> -|3> the leading-order 1-3 coherence equals the
/// weak-probe expression, which is also the source term of the propagation
/// equation. The basis change flips the sign of rho13.
cdouble probe_coherence(const DensityMatrix& state);

} // namespace loopphase::atomcore
