#pragma once

// Raw-pointer signatures shared by the kernel variants. Kept free of C++
// library headers so the vector translation units stay minimal.

#include <stddef.h>

namespace loopphase::kernels::detail {

// `n` counts complex pixels; complex buffers hold 2 * n doubles.

void attenuate_add_scalar(const double* in, const double* decay, const double* source,
                          double* out, size_t n);
void rk4_linear_scalar(double* u, const double* rate, const double* source, double h, int steps,
                       size_t n);
void squared_modulus_scalar(const double* in, double* out, size_t n);

#if defined(LOOPPHASE_HAVE_AVX2)
void attenuate_add_avx2(const double* in, const double* decay, const double* source, double* out,
                        size_t n);
void rk4_linear_avx2(double* u, const double* rate, const double* source, double h, int steps,
                     size_t n);
void squared_modulus_avx2(const double* in, double* out, size_t n);
#endif

#if defined(LOOPPHASE_HAVE_NEON)
void attenuate_add_neon(const double* in, const double* decay, const double* source, double* out,
                        size_t n);
void rk4_linear_neon(double* u, const double* rate, const double* source, double h, int steps,
                     size_t n);
void squared_modulus_neon(const double* in, double* out, size_t n);
#endif

} // namespace loopphase::kernels::detail
