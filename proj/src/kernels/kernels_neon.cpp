// NEON variants for aarch64: one interleaved complex pixel per float64x2_t.
// Only mul/add are used so results match the scalar reference exactly.

#include "kernels_impl.h"

#include <arm_neon.h>

namespace loopphase::kernels::detail {

void attenuate_add_neon(const double* in, const double* decay, const double* source, double* out,
                        size_t n) {
  for (size_t k = 0; k < n; ++k) {
    const float64x2_t v = vld1q_f64(in + 2 * k);
    const float64x2_t s = vld1q_f64(source + 2 * k);
    vst1q_f64(out + 2 * k, vaddq_f64(vmulq_f64(v, vdupq_n_f64(decay[k])), s));
  }
}

void rk4_linear_neon(double* u, const double* rate, const double* source, double h, int steps,
                     size_t n) {
  const float64x2_t vh = vdupq_n_f64(h);
  const float64x2_t vhalf = vdupq_n_f64(0.5 * h);
  const float64x2_t vsixth = vdupq_n_f64(h / 6.0);
  for (size_t k = 0; k < n; ++k) {
    const float64x2_t nr = vdupq_n_f64(-rate[k]);
    const float64x2_t s = vld1q_f64(source + 2 * k);
    float64x2_t y = vld1q_f64(u + 2 * k);
    for (int step = 0; step < steps; ++step) {
      const float64x2_t k1 = vaddq_f64(vmulq_f64(nr, y), s);
      const float64x2_t k2 = vaddq_f64(vmulq_f64(nr, vaddq_f64(y, vmulq_f64(vhalf, k1))), s);
      const float64x2_t k3 = vaddq_f64(vmulq_f64(nr, vaddq_f64(y, vmulq_f64(vhalf, k2))), s);
      const float64x2_t k4 = vaddq_f64(vmulq_f64(nr, vaddq_f64(y, vmulq_f64(vh, k3))), s);
      float64x2_t sum = vaddq_f64(k1, vaddq_f64(k2, k2));
      sum = vaddq_f64(sum, vaddq_f64(k3, k3));
      sum = vaddq_f64(sum, k4);
      y = vaddq_f64(y, vmulq_f64(vsixth, sum));
    }
    vst1q_f64(u + 2 * k, y);
  }
}

void squared_modulus_neon(const double* in, double* out, size_t n) {
  for (size_t k = 0; k < n; ++k) {
    const float64x2_t v = vld1q_f64(in + 2 * k);
    const float64x2_t sq = vmulq_f64(v, v);
    out[k] = vgetq_lane_f64(sq, 0) + vgetq_lane_f64(sq, 1);
  }
}

} // namespace loopphase::kernels::detail
