#pragma once

// Laguerre-Gaussian mode evaluation and sampling onto square field grids.
//
// The mode is the area-normalized paraxial LG_m^l beam:
//
//   f(r, theta, z) = C_{l,m} / w(z) * (sqrt(2) r / w(z))^|l| * L_m^|l|(2 r^2 / w(z)^2)
//                    * exp(-r^2 / w(z)^2) * exp(i l theta) * exp(i k r^2 / (2 R(z)) - i Psi(z))
//
// with C_{l,m} = sqrt(2 m! / (pi (m + |l|)!)), w(z) = w0 sqrt(1 + z^2/zR^2),
// R(z) = z + zR^2 / z, Psi(z) = (2m + |l| + 1) atan(z / zR), zR = pi w0^2 / lambda.
// At z = 0 the curvature and Gouy factors are exactly one.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace loopphase::beamlab {

using cdouble = std::complex<double>;

struct LGModeSpec {
  int l = 0;               ///< topological charge
  int m = 0;               ///< radial index
  double w0 = 1.0;         ///< beam waist (length units)
  double wavelength = 1.0; ///< length units
  double amplitude = 1.0;  ///< multiplies the unit-norm mode (Rabi units of gamma13)

  void validate() const;
  double rayleigh_range() const;
  double waist_at(double z) const;
};

/// Square sampling window. Pixel (i, j) sits at the pixel *center*
/// x_i = cx + (2i + 1 - nx) / nx * half_extent (same for y); storage is
/// row-major with j (y) as the row index.
struct GridSpec {
  std::size_t nx = 512;
  std::size_t ny = 512;
  double half_extent = 1.0;
  double center_x = 0.0;
  double center_y = 0.0;

  void validate() const;
  std::size_t size() const { return nx * ny; }
  double dx() const { return 2.0 * half_extent / static_cast<double>(nx); }
  double dy() const { return 2.0 * half_extent / static_cast<double>(ny); }
  double x(std::size_t i) const;
  double y(std::size_t j) const;
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }

  bool operator==(const GridSpec&) const = default;
};

struct ComplexField {
  GridSpec grid;
  std::vector<cdouble> values;

  ComplexField() = default;
  explicit ComplexField(GridSpec g) : grid(g), values(g.size()) {}

  cdouble& at(std::size_t i, std::size_t j) { return values[grid.index(i, j)]; }
  const cdouble& at(std::size_t i, std::size_t j) const { return values[grid.index(i, j)]; }

  /// Throws ValidationError on size mismatch or non-finite entries.
  void validate() const;
};

/// Generalized Laguerre polynomial L_n^alpha(x) by the three-term recurrence.
double laguerre(int n, double alpha, double x);

/// sqrt(2 m! / (pi (m + |l|)!)), computed as a running product.
double normalization_constant(int l, int m);

cdouble evaluate_mode(const LGModeSpec& spec, double r, double theta, double z = 0.0);

/// Radius of the intensity maximum. Closed form w(z) sqrt(|l|/2) for m = 0;
/// for m > 0 the outermost-dominant global maximum is located numerically.
double peak_radius(const LGModeSpec& spec, double z = 0.0);

/// max_r |f| for the given spec (includes `amplitude`).
double peak_modulus(const LGModeSpec& spec, double z = 0.0);

/// Copy of `spec` whose amplitude is chosen so that max |f| == peak_rabi.
LGModeSpec with_peak_rabi(LGModeSpec spec, double peak_rabi);

/// Samples evaluate_mode at every pixel center. `jobs` is a parallelism hint
/// (0 = hardware concurrency); output does not depend on it.
ComplexField sample_field(const LGModeSpec& spec, const GridSpec& grid, double z = 0.0,
                          unsigned jobs = 0);

/// 2 pi * integral_0^inf |f(r)|^2 r dr of the unit-amplitude mode by adaptive
/// Gauss-Kronrod quadrature. Throws NumericalError if the error estimate
/// exceeds `tolerance`.
double mode_norm(const LGModeSpec& spec, double tolerance = 1e-10);

} // namespace loopphase::beamlab
