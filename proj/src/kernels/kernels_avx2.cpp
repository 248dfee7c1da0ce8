// AVX2 variants: two interleaved complex pixels per 256-bit register.
// Only mul/add are used so results match the scalar reference exactly.

#include "kernels_impl.h"

#include <immintrin.h>

namespace loopphase::kernels::detail {

namespace {

// [r0, r1] -> [r0, r0, r1, r1]
inline __m256d spread_pair(const double* p) {
  return _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(p)), 0x50);
}

} // namespace

void attenuate_add_avx2(const double* in, const double* decay, const double* source, double* out,
                        size_t n) {
  size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const __m256d v = _mm256_loadu_pd(in + 2 * k);
    const __m256d d = spread_pair(decay + k);
    const __m256d s = _mm256_loadu_pd(source + 2 * k);
    _mm256_storeu_pd(out + 2 * k, _mm256_add_pd(_mm256_mul_pd(v, d), s));
  }
  if (k < n) attenuate_add_scalar(in + 2 * k, decay + k, source + 2 * k, out + 2 * k, n - k);
}

void rk4_linear_avx2(double* u, const double* rate, const double* source, double h, int steps,
                     size_t n) {
  const __m256d vh = _mm256_set1_pd(h);
  const __m256d vhalf = _mm256_set1_pd(0.5 * h);
  const __m256d vsixth = _mm256_set1_pd(h / 6.0);
  const __m256d zero = _mm256_setzero_pd();
  size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const __m256d nr = _mm256_sub_pd(zero, spread_pair(rate + k));
    const __m256d s = _mm256_loadu_pd(source + 2 * k);
    __m256d y = _mm256_loadu_pd(u + 2 * k);
    for (int step = 0; step < steps; ++step) {
      const __m256d k1 = _mm256_add_pd(_mm256_mul_pd(nr, y), s);
      const __m256d k2 =
          _mm256_add_pd(_mm256_mul_pd(nr, _mm256_add_pd(y, _mm256_mul_pd(vhalf, k1))), s);
      const __m256d k3 =
          _mm256_add_pd(_mm256_mul_pd(nr, _mm256_add_pd(y, _mm256_mul_pd(vhalf, k2))), s);
      const __m256d k4 =
          _mm256_add_pd(_mm256_mul_pd(nr, _mm256_add_pd(y, _mm256_mul_pd(vh, k3))), s);
      __m256d sum = _mm256_add_pd(k1, _mm256_add_pd(k2, k2));
      sum = _mm256_add_pd(sum, _mm256_add_pd(k3, k3));
      sum = _mm256_add_pd(sum, k4);
      y = _mm256_add_pd(y, _mm256_mul_pd(vsixth, sum));
    }
    _mm256_storeu_pd(u + 2 * k, y);
  }
  if (k < n) rk4_linear_scalar(u + 2 * k, rate + k, source + 2 * k, h, steps, n - k);
}

void squared_modulus_avx2(const double* in, double* out, size_t n) {
  size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d a = _mm256_loadu_pd(in + 2 * k);     // re0 im0 re1 im1
    const __m256d b = _mm256_loadu_pd(in + 2 * k + 4); // re2 im2 re3 im3
    const __m256d a2 = _mm256_mul_pd(a, a);
    const __m256d b2 = _mm256_mul_pd(b, b);
    // hadd -> [a0+a1, b0+b1, a2+a3, b2+b3] = [|z0|^2, |z2|^2, |z1|^2, |z3|^2]
    const __m256d sums = _mm256_hadd_pd(a2, b2);
    _mm256_storeu_pd(out + k, _mm256_permute4x64_pd(sums, 0xD8));
  }
  if (k < n) squared_modulus_scalar(in + 2 * k, out + k, n - k);
}

} // namespace loopphase::kernels::detail
