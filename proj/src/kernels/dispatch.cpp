#include "loopphase/kernels.hpp"

#include "kernels_impl.h"
#include "loopphase/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace loopphase::kernels {

namespace {

Isa initial_isa() {
  if (const char* env = std::getenv("LOOPPHASE_KERNEL")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && isa_available(Isa::avx2)) return Isa::avx2;
    if (v == "neon" && isa_available(Isa::neon)) return Isa::neon;
  }
  return detect_isa();
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ValidationError(what, "buffer sizes differ");
}

} // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
  case Isa::scalar: return "scalar";
  case Isa::avx2: return "avx2";
  case Isa::neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
  case Isa::scalar: return true;
  case Isa::avx2:
#if defined(LOOPPHASE_HAVE_AVX2)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
  case Isa::neon:
#if defined(LOOPPHASE_HAVE_NEON)
    return true;
#else
    return false;
#endif
  }
  return false;
}

Isa detect_isa() {
  if (isa_available(Isa::avx2)) return Isa::avx2;
  if (isa_available(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

namespace {

void require(Isa isa) {
  if (!isa_available(isa))
    throw ValidationError("kernel", std::string(isa_name(isa)) + " is not available on this machine");
}

} // namespace

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  require(isa);
  active().store(isa, std::memory_order_relaxed);
}

void attenuate_add(Isa isa, std::span<const cdouble> in, std::span<const double> decay,
                   std::span<const cdouble> source, std::span<cdouble> out) {
  require(isa);
  check_sizes(in.size(), decay.size(), "attenuate_add");
  check_sizes(in.size(), source.size(), "attenuate_add");
  check_sizes(in.size(), out.size(), "attenuate_add");
  const auto* pin = reinterpret_cast<const double*>(in.data());
  const auto* psrc = reinterpret_cast<const double*>(source.data());
  auto* pout = reinterpret_cast<double*>(out.data());
  switch (isa) {
#if defined(LOOPPHASE_HAVE_AVX2)
  case Isa::avx2: return detail::attenuate_add_avx2(pin, decay.data(), psrc, pout, in.size());
#endif
#if defined(LOOPPHASE_HAVE_NEON)
  case Isa::neon: return detail::attenuate_add_neon(pin, decay.data(), psrc, pout, in.size());
#endif
  default: return detail::attenuate_add_scalar(pin, decay.data(), psrc, pout, in.size());
  }
}

void rk4_linear(Isa isa, std::span<cdouble> u, std::span<const double> rate,
                std::span<const cdouble> source, double h, int steps) {
  require(isa);
  check_sizes(u.size(), rate.size(), "rk4_linear");
  check_sizes(u.size(), source.size(), "rk4_linear");
  auto* pu = reinterpret_cast<double*>(u.data());
  const auto* psrc = reinterpret_cast<const double*>(source.data());
  switch (isa) {
#if defined(LOOPPHASE_HAVE_AVX2)
  case Isa::avx2: return detail::rk4_linear_avx2(pu, rate.data(), psrc, h, steps, u.size());
#endif
#if defined(LOOPPHASE_HAVE_NEON)
  case Isa::neon: return detail::rk4_linear_neon(pu, rate.data(), psrc, h, steps, u.size());
#endif
  default: return detail::rk4_linear_scalar(pu, rate.data(), psrc, h, steps, u.size());
  }
}

void squared_modulus(Isa isa, std::span<const cdouble> in, std::span<double> out) {
  require(isa);
  check_sizes(in.size(), out.size(), "squared_modulus");
  const auto* pin = reinterpret_cast<const double*>(in.data());
  switch (isa) {
#if defined(LOOPPHASE_HAVE_AVX2)
  case Isa::avx2: return detail::squared_modulus_avx2(pin, out.data(), in.size());
#endif
#if defined(LOOPPHASE_HAVE_NEON)
  case Isa::neon: return detail::squared_modulus_neon(pin, out.data(), in.size());
#endif
  default: return detail::squared_modulus_scalar(pin, out.data(), in.size());
  }
}

void attenuate_add(std::span<const cdouble> in, std::span<const double> decay,
                   std::span<const cdouble> source, std::span<cdouble> out) {
  attenuate_add(active_isa(), in, decay, source, out);
}

void rk4_linear(std::span<cdouble> u, std::span<const double> rate,
                std::span<const cdouble> source, double h, int steps) {
  rk4_linear(active_isa(), u, rate, source, h, steps);
}

void squared_modulus(std::span<const cdouble> in, std::span<double> out) {
  squared_modulus(active_isa(), in, out);
}

} // namespace loopphase::kernels
