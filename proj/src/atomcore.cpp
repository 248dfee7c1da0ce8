#include "loopphase/atomcore.hpp"

#include "loopphase/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace loopphase::atomcore {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr cdouble I{0.0, 1.0};

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

} // namespace

double wrap_2pi(double angle) {
  double w = std::fmod(angle, two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w -= two_pi;
  return w;
}

double wrap_pi(double angle) {
  double w = wrap_2pi(angle);
  if (w > std::numbers::pi) w -= two_pi;
  return w;
}

void CouplingConfig::validate() const {
  if (!finite_nonneg(omega12)) throw ValidationError("coupling.omega12", "must be finite and >= 0");
  if (!finite_nonneg(omega23)) throw ValidationError("coupling.omega23", "must be finite and >= 0");
  if (!finite_nonneg(omega13)) throw ValidationError("coupling.omega13", "must be finite and >= 0");
  if (!std::isfinite(phi12)) throw ValidationError("coupling.phi12", "must be finite");
  if (!std::isfinite(phi23)) throw ValidationError("coupling.phi23", "must be finite");
  if (!std::isfinite(phi13)) throw ValidationError("coupling.phi13", "must be finite");
}

CouplingConfig CouplingConfig::with_loop_phase(double omega12, double omega23, double omega13,
                                               double phase) {
  CouplingConfig c;
  c.omega12 = omega12;
  c.omega23 = omega23;
  c.omega13 = omega13;
  c.phi12 = phase;
  return c;
}

RelaxationConfig RelaxationConfig::with_gamma12(double gamma12) {
  RelaxationConfig r;
  r.gamma12 = gamma12;
  r.gamma23 = (r.gamma13 + gamma12) / 2.0;
  return r;
}

void RelaxationConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(Gamma)) throw ValidationError("relaxation.Gamma", "must be positive");
  if (!positive(gamma12)) throw ValidationError("relaxation.gamma12", "must be positive");
  if (!positive(gamma13)) throw ValidationError("relaxation.gamma13", "must be positive");
  if (!positive(gamma23)) throw ValidationError("relaxation.gamma23", "must be positive");
}

std::vector<std::string> RelaxationConfig::advisories() const {
  std::vector<std::string> out;
  if (gamma12 > 0.1 * gamma13)
    out.emplace_back("gamma12 is not much smaller than gamma13; the weak-probe regime assumes "
                     "slow ground-state decoherence");
  return out;
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix3c> solver(rho, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

Matrix3c build_hamiltonian_full(const CouplingConfig& config) {
  config.validate();
  Matrix3c h = Matrix3c::Zero();
  h(0, 1) = std::polar(config.omega12, config.phi12);
  h(0, 2) = std::polar(config.omega13, config.phi13);
  h(1, 2) = std::polar(config.omega23, config.phi23);
  h(1, 0) = std::conj(h(0, 1));
  h(2, 0) = std::conj(h(0, 2));
  h(2, 1) = std::conj(h(1, 2));
  return h;
}

Matrix3c build_hamiltonian_reduced(const CouplingConfig& config) {
  config.validate();
  Matrix3c h = Matrix3c::Zero();
  h(0, 1) = std::polar(config.omega12, config.loop_phase());
  h(0, 2) = config.omega13;
  h(1, 2) = config.omega23;
  h(1, 0) = std::conj(h(0, 1));
  h(2, 0) = h(0, 2);
  h(2, 1) = h(1, 2);
  return h;
}

namespace {

struct Cubic {
  double p;
  double q;
};

Cubic characteristic(const CouplingConfig& c) {
  const double p = c.omega12 * c.omega12 + c.omega23 * c.omega23 + c.omega13 * c.omega13;
  const double q = 2.0 * c.omega12 * c.omega23 * c.omega13 * std::cos(c.loop_phase());
  return {p, q};
}

} // namespace

std::array<double, 3> eigen_spectrum(const CouplingConfig& config) {
  config.validate();
  const auto [p, q] = characteristic(config);
  if (p == 0.0) return {0.0, 0.0, 0.0};

  // Trigonometric roots of the depressed cubic t^3 - p t - q = 0, with the
  // angle taken from atan2(sqrt(4p^3 - 27q^2), 3 sqrt(3) q). With x, y, z the
  // squared magnitudes, 4p^3 - 27q^2 = 4 D + 108 xyz sin^2(Phi) where
  //   D = (x+y+z)^3 - 27xyz = s/2 sum (x-y)^2 + 3 [x (y-z)^2 + y (z-x)^2 + z (x-y)^2]
  // is a sum of non-negative terms, so degenerate roots come out exact instead
  // of suffering the square-root loss of acos near +-1.
  const double x = config.omega12 * config.omega12;
  const double y = config.omega23 * config.omega23;
  const double z = config.omega13 * config.omega13;
  const double dxy = x - y, dyz = y - z, dzx = z - x;
  const double spread = 0.5 * p * (dxy * dxy + dyz * dyz + dzx * dzx) +
                        3.0 * (x * dyz * dyz + y * dzx * dzx + z * dxy * dxy);
  const double s = std::sin(config.loop_phase());
  const double disc = 4.0 * spread + 108.0 * x * y * z * s * s;
  const double amp = 2.0 * std::sqrt(p / 3.0);
  const double base = std::atan2(std::sqrt(disc), 3.0 * std::sqrt(3.0) * q) / 3.0;
  std::array<double, 3> roots{};
  for (int k = 0; k < 3; ++k)
    roots[k] = amp * std::cos(base - two_pi * k / 3.0);
  std::sort(roots.begin(), roots.end());
  return roots;
}

double characteristic_residual(const CouplingConfig& config, double lambda) {
  const auto [p, q] = characteristic(config);
  const double scale = std::max({std::pow(p, 1.5), std::abs(q), 1e-300});
  return std::abs(lambda * lambda * lambda - p * lambda - q) / scale;
}

Vector3c dark_state(const CouplingConfig& config) {
  config.validate();
  const double phase = config.loop_phase();
  if (std::abs(std::cos(phase)) > 1e-9)
    throw ValidationError("coupling", "no dark state: cos(loop phase) != 0");
  const double norm2 = config.omega12 * config.omega12 + config.omega23 * config.omega23 +
                       config.omega13 * config.omega13;
  if (norm2 == 0.0) throw ValidationError("coupling", "all Rabi frequencies are zero");

  // e^{i Phi} snapped onto +-i; the kernel is (-h W23, -conj(h) W13, W12).
  const cdouble h = std::sin(phase) > 0.0 ? I : -I;
  Vector3c d;
  d << -h * config.omega23, -std::conj(h) * config.omega13, cdouble(config.omega12, 0.0);
  return d / std::sqrt(norm2);
}

Matrix3c bloch_rhs(const Matrix3c& rho, const CouplingConfig& config,
                   const RelaxationConfig& relax) {
  const double w12 = config.omega12;
  const double w23 = config.omega23;
  const double w13 = config.omega13;
  const cdouble e = std::polar(1.0, config.loop_phase());
  const cdouble ec = std::conj(e);

  const cdouble r11 = rho(0, 0), r22 = rho(1, 1), r33 = rho(2, 2);
  const cdouble r12 = rho(0, 1), r13 = rho(0, 2), r23 = rho(1, 2);
  const cdouble r21 = rho(1, 0), r31 = rho(2, 0), r32 = rho(2, 1);

  Matrix3c d;
  d(0, 0) = I * w12 * (e * r21 - ec * r12) + I * w13 * (r31 - r13) + relax.Gamma * r33;
  d(1, 1) = I * w12 * (ec * r12 - e * r21) + I * w23 * (r32 - r23) + relax.Gamma * r33;
  d(0, 1) = I * w12 * (r22 - r11) * e + I * w13 * r32 - I * w23 * r13 - relax.gamma12 * r12;
  d(0, 2) = I * w13 * (r33 - r11) + I * w12 * e * r23 - I * w23 * r12 - relax.gamma13 * r13;
  d(1, 2) = I * w23 * (r33 - r22) + I * w12 * ec * r13 - I * w13 * r21 - relax.gamma23 * r23;
  d(2, 2) = -d(0, 0) - d(1, 1);
  d(1, 0) = std::conj(d(0, 1));
  d(2, 0) = std::conj(d(0, 2));
  d(2, 1) = std::conj(d(1, 2));
  return d;
}

namespace {

using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;

Matrix3c unpack(const Vec8& x) {
  Matrix3c r;
  r(0, 0) = x(0);
  r(1, 1) = x(1);
  r(2, 2) = 1.0 - x(0) - x(1);
  r(0, 1) = cdouble(x(2), x(3));
  r(0, 2) = cdouble(x(4), x(5));
  r(1, 2) = cdouble(x(6), x(7));
  r(1, 0) = std::conj(r(0, 1));
  r(2, 0) = std::conj(r(0, 2));
  r(2, 1) = std::conj(r(1, 2));
  return r;
}

Vec8 equations(const Matrix3c& d) {
  Vec8 f;
  f << d(0, 0).real(), d(1, 1).real(), d(0, 1).real(), d(0, 1).imag(), d(0, 2).real(),
      d(0, 2).imag(), d(1, 2).real(), d(1, 2).imag();
  return f;
}

} // namespace

DensityMatrix steady_state(const CouplingConfig& config, const RelaxationConfig& relax) {
  config.validate();
  relax.validate();

  // F(x) is affine in the eight unknowns: F(x) = F(0) + J x.
  const Vec8 f0 = equations(bloch_rhs(unpack(Vec8::Zero()), config, relax));
  Mat8 jac;
  for (int k = 0; k < 8; ++k) {
    Vec8 unit = Vec8::Zero();
    unit(k) = 1.0;
    jac.col(k) = equations(bloch_rhs(unpack(unit), config, relax)) - f0;
  }

  Eigen::FullPivLU<Mat8> lu(jac);
  lu.setThreshold(1e-12);
  DensityMatrix out;
  if (lu.rank() < 8) {
    const bool fields_off = config.omega12 == 0.0 && config.omega23 == 0.0 && config.omega13 == 0.0;
    if (!fields_off)
      throw NumericalError("steady_state: singular Bloch system (rank " + std::to_string(lu.rank()) +
                           " of 8)");
    return DensityMatrix::ground();
  }
  out.rho = unpack(lu.solve(-f0));

  const double scale = std::max({1.0, config.omega12 * config.omega12,
                                 config.omega23 * config.omega23, config.omega13 * config.omega13,
                                 relax.Gamma, relax.gamma13, relax.gamma23});
  const double residual = bloch_rhs(out.rho, config, relax).cwiseAbs().maxCoeff();
  if (residual > 1e-10 * scale)
    throw NumericalError("steady_state: residual " + std::to_string(residual) + " too large");
  return out;
}

cdouble weak_probe_coherence(cdouble probe, const CouplingConfig& config,
                             const RelaxationConfig& relax) {
  const double width = EffectiveWidth::of(config.omega23, relax).value;
  const cdouble loop = config.omega12 * config.omega23 * std::polar(1.0, config.loop_phase());
  return (I * relax.gamma12 * probe + loop) / (relax.gamma13 * width);
}

cdouble weak_probe_coherence(const CouplingConfig& config, const RelaxationConfig& relax) {
  return weak_probe_coherence(cdouble(config.omega13, 0.0), config, relax);
}

std::optional<std::string> weak_probe_advisory(const CouplingConfig& config) {
  if (config.omega23 == 0.0 || config.omega13 / config.omega23 > 0.1)
    return "probe is not weak: omega13 / omega23 exceeds 0.1";
  return std::nullopt;
}

cdouble probe_coherence(const DensityMatrix& state) { return -state.rho(0, 2); }

} // namespace loopphase::atomcore
