#pragma once

// Per-pixel arithmetic kernels behind the propagation pipeline.
//
// Every kernel has a scalar reference implementation and, where the build and
// CPU allow it, an AVX2 (x86-64) or NEON (aarch64) variant picked at runtime.
// The vector variants perform the same IEEE operations in the same order as
// the scalar code (no fused multiply-add), so all variants agree bit for bit.
//
// Complex arrays are interleaved (re, im) pairs, i.e. std::complex<double>.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace loopphase::kernels {

using cdouble = std::complex<double>;

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

/// Best variant this binary and CPU support.
Isa detect_isa();

/// Variant used by the dispatching entry points. Defaults to detect_isa(),
/// unless LOOPPHASE_KERNEL=scalar|avx2|neon is set in the environment.
Isa active_isa();

/// Overrides the active variant. Throws ValidationError if `isa` is not
/// available on this machine.
void set_active_isa(Isa isa);

bool isa_available(Isa isa);

/// out[k] = in[k] * decay[k] + source[k]
void attenuate_add(std::span<const cdouble> in, std::span<const double> decay,
                   std::span<const cdouble> source, std::span<cdouble> out);

/// In-place classical RK4 for du/dz = -rate[k] u + source[k], `steps` steps of size h.
void rk4_linear(std::span<cdouble> u, std::span<const double> rate,
                std::span<const cdouble> source, double h, int steps);

/// out[k] = re^2 + im^2
void squared_modulus(std::span<const cdouble> in, std::span<double> out);

/// Explicit-variant entry points (used by equivalence tests and benchmarks).
void attenuate_add(Isa isa, std::span<const cdouble> in, std::span<const double> decay,
                   std::span<const cdouble> source, std::span<cdouble> out);
void rk4_linear(Isa isa, std::span<cdouble> u, std::span<const double> rate,
                std::span<const cdouble> source, double h, int steps);
void squared_modulus(Isa isa, std::span<const cdouble> in, std::span<double> out);

} // namespace loopphase::kernels
