// Reference kernels. Compiled with -ffp-contract=off; the vector variants
// reproduce this exact operation order.

#include "kernels_impl.h"

namespace loopphase::kernels::detail {

void attenuate_add_scalar(const double* in, const double* decay, const double* source,
                          double* out, size_t n) {
  for (size_t k = 0; k < n; ++k) {
    const double d = decay[k];
    out[2 * k] = in[2 * k] * d + source[2 * k];
    out[2 * k + 1] = in[2 * k + 1] * d + source[2 * k + 1];
  }
}

namespace {

inline double rk4_component(double u, double neg_rate, double s, double h, double half_h,
                            double sixth_h, int steps) {
  for (int step = 0; step < steps; ++step) {
    const double k1 = neg_rate * u + s;
    const double k2 = neg_rate * (u + half_h * k1) + s;
    const double k3 = neg_rate * (u + half_h * k2) + s;
    const double k4 = neg_rate * (u + h * k3) + s;
    double sum = k1 + (k2 + k2);
    sum = sum + (k3 + k3);
    sum = sum + k4;
    u = u + sixth_h * sum;
  }
  return u;
}

} // namespace

void rk4_linear_scalar(double* u, const double* rate, const double* source, double h, int steps,
                       size_t n) {
  const double half_h = 0.5 * h;
  const double sixth_h = h / 6.0;
  for (size_t k = 0; k < n; ++k) {
    const double nr = -rate[k];
    u[2 * k] = rk4_component(u[2 * k], nr, source[2 * k], h, half_h, sixth_h, steps);
    u[2 * k + 1] = rk4_component(u[2 * k + 1], nr, source[2 * k + 1], h, half_h, sixth_h, steps);
  }
}

void squared_modulus_scalar(const double* in, double* out, size_t n) {
  for (size_t k = 0; k < n; ++k) {
    const double re = in[2 * k];
    const double im = in[2 * k + 1];
    out[k] = re * re + im * im;
  }
}

} // namespace loopphase::kernels::detail
