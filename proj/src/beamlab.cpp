#include "loopphase/beamlab.hpp"

#include "loopphase/errors.hpp"
#include "loopphase/parallel.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace loopphase::beamlab {

namespace {

bool finite(double v) { return std::isfinite(v); }

} // namespace

void LGModeSpec::validate() const {
  if (m < 0) throw ValidationError("m", "radial index must be non-negative");
  if (!finite(w0) || w0 <= 0.0) throw ValidationError("w0", "beam waist must be positive and finite");
  if (!finite(wavelength) || wavelength <= 0.0)
    throw ValidationError("wavelength", "wavelength must be positive and finite");
  if (!finite(amplitude) || amplitude < 0.0)
    throw ValidationError("amplitude", "amplitude must be non-negative and finite");
  if (!(rayleigh_range() > 0.0) || !finite(rayleigh_range()))
    throw ValidationError("wavelength", "Rayleigh range must be positive");
}

double LGModeSpec::rayleigh_range() const {
  return std::numbers::pi * w0 * w0 / wavelength;
}

double LGModeSpec::waist_at(double z) const {
  if (z == 0.0) return w0;
  const double zr = rayleigh_range();
  return w0 * std::sqrt(1.0 + (z * z) / (zr * zr));
}

void GridSpec::validate() const {
  if (nx < 2) throw ValidationError("grid.nx", "need at least 2 pixels");
  if (ny < 2) throw ValidationError("grid.ny", "need at least 2 pixels");
  if (!finite(half_extent) || half_extent <= 0.0)
    throw ValidationError("grid.half_extent", "must be positive and finite");
  if (!finite(center_x) || !finite(center_y)) throw ValidationError("grid.center", "must be finite");
}

double GridSpec::x(std::size_t i) const {
  const double k = 2.0 * static_cast<double>(i) + 1.0 - static_cast<double>(nx);
  return center_x + k / static_cast<double>(nx) * half_extent;
}

double GridSpec::y(std::size_t j) const {
  const double k = 2.0 * static_cast<double>(j) + 1.0 - static_cast<double>(ny);
  return center_y + k / static_cast<double>(ny) * half_extent;
}

void ComplexField::validate() const {
  grid.validate();
  if (values.size() != grid.size())
    throw ValidationError("field", "value count does not match grid dimensions");
  for (const auto& v : values)
    if (!finite(v.real()) || !finite(v.imag())) throw ValidationError("field", "non-finite entry");
}

double laguerre(int n, double alpha, double x) {
  if (n < 0) throw ValidationError("n", "Laguerre degree must be non-negative");
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = 1.0 + alpha - x;
  for (int k = 1; k < n; ++k) {
    const double next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

double normalization_constant(int l, int m) {
  // m! / (m + |l|)! = 1 / ((m+1)(m+2)...(m+|l|))
  double ratio = 1.0;
  for (int k = 1; k <= std::abs(l); ++k) ratio /= static_cast<double>(m + k);
  return std::sqrt(2.0 * ratio / std::numbers::pi);
}

cdouble evaluate_mode(const LGModeSpec& spec, double r, double theta, double z) {
  if (!finite(r) || !finite(theta) || !finite(z))
    throw ValidationError("evaluate_mode", "non-finite coordinate");
  if (r < 0.0) throw ValidationError("r", "radius must be non-negative");

  const int al = std::abs(spec.l);
  const double w = spec.waist_at(z);
  const double s = r / w;
  const double radial = spec.amplitude * normalization_constant(spec.l, spec.m) / w *
                        std::pow(std::numbers::sqrt2 * s, al) *
                        laguerre(spec.m, static_cast<double>(al), 2.0 * s * s) * std::exp(-s * s);

  double phase = spec.l * theta;
  if (z != 0.0) {
    const double zr = spec.rayleigh_range();
    const double k = 2.0 * std::numbers::pi / spec.wavelength;
    const double curvature = z + zr * zr / z;
    const double gouy = (2.0 * spec.m + al + 1.0) * std::atan(z / zr);
    phase += k * r * r / (2.0 * curvature) - gouy;
  }
  return std::polar(radial, phase);
}

namespace {

double radial_modulus(const LGModeSpec& spec, double r, double z) {
  return std::abs(evaluate_mode(spec, r, 0.0, z));
}

} // namespace

double peak_radius(const LGModeSpec& spec, double z) {
  spec.validate();
  const double w = spec.waist_at(z);
  if (spec.m == 0) return w * std::sqrt(std::abs(spec.l) / 2.0);

  // Coarse scan then golden-section refinement around the best sample.
  constexpr int samples = 4000;
  const double r_max = 4.0 * w * std::sqrt(1.0 + spec.m + std::abs(spec.l));
  double best_r = 0.0;
  double best = -1.0;
  for (int k = 0; k <= samples; ++k) {
    const double r = r_max * k / samples;
    const double v = radial_modulus(spec, r, z);
    if (v > best) {
      best = v;
      best_r = r;
    }
  }
  const double step = r_max / samples;
  double a = std::max(0.0, best_r - step);
  double b = best_r + step;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200 && (b - a) > 1e-14 * w; ++it) {
    const double c = b - inv_phi * (b - a);
    const double d = a + inv_phi * (b - a);
    if (radial_modulus(spec, c, z) > radial_modulus(spec, d, z))
      b = d;
    else
      a = c;
  }
  return 0.5 * (a + b);
}

double peak_modulus(const LGModeSpec& spec, double z) {
  return radial_modulus(spec, peak_radius(spec, z), z);
}

LGModeSpec with_peak_rabi(LGModeSpec spec, double peak_rabi) {
  if (!finite(peak_rabi) || peak_rabi < 0.0)
    throw ValidationError("rabi", "peak Rabi frequency must be non-negative");
  spec.amplitude = 1.0;
  spec.validate();
  spec.amplitude = peak_rabi / peak_modulus(spec);
  return spec;
}

ComplexField sample_field(const LGModeSpec& spec, const GridSpec& grid, double z, unsigned jobs) {
  spec.validate();
  grid.validate();
  ComplexField field(grid);
  parallel_for(grid.size(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const double x = grid.x(idx % grid.nx);
      const double y = grid.y(idx / grid.nx);
      field.values[idx] = evaluate_mode(spec, std::hypot(x, y), std::atan2(y, x), z);
    }
  });
  return field;
}

double mode_norm(const LGModeSpec& spec, double tolerance) {
  LGModeSpec unit = spec;
  unit.amplitude = 1.0;
  unit.validate();
  auto integrand = [&](double r) {
    const double v = radial_modulus(unit, r, 0.0);
    return v * v * r;
  };
  double error = 0.0;
  const double w = unit.w0;
  // Integrate in units of w0 so the tolerance is scale free.
  auto scaled = [&](double s) { return integrand(s * w) * w; };
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      scaled, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-14, &error);
  if (!(error <= tolerance))
    throw NumericalError("mode_norm: quadrature did not converge (error estimate " +
                         std::to_string(error) + ")");
  return 2.0 * std::numbers::pi * value;
}

} // namespace loopphase::beamlab
