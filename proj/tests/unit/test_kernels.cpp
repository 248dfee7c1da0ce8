#include "doctest.h"

#include "loopphase/errors.hpp"
#include "loopphase/kernels.hpp"

#include <cstring>
#include <random>
#include <vector>

using namespace loopphase;
using kernels::Isa;
using kernels::cdouble;

namespace {

struct Inputs {
  std::vector<cdouble> u, source;
  std::vector<double> decay, rate;
};

// Odd length so every vector variant exercises its scalar tail.
Inputs make_inputs(std::size_t n) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> d(-2.0, 2.0), p(0.0, 3.0);
  Inputs in;
  for (std::size_t k = 0; k < n; ++k) {
    in.u.emplace_back(d(rng), d(rng));
    in.source.emplace_back(d(rng), d(rng));
    in.decay.push_back(p(rng));
    in.rate.push_back(p(rng));
  }
  return in;
}

bool same_bits(const void* a, const void* b, std::size_t bytes) { return std::memcmp(a, b, bytes) == 0; }

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("vector variants agree with scalar bit for bit") {
  const auto in = make_inputs(1037);
  const std::size_t n = in.u.size();

  std::vector<cdouble> ref_aa(n), ref_rk = in.u;
  std::vector<double> ref_sq(n);
  kernels::attenuate_add(Isa::scalar, in.u, in.decay, in.source, ref_aa);
  kernels::rk4_linear(Isa::scalar, ref_rk, in.rate, in.source, 0.013, 37);
  kernels::squared_modulus(Isa::scalar, in.u, ref_sq);

  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (!kernels::isa_available(isa)) continue;
    CAPTURE(kernels::isa_name(isa));
    std::vector<cdouble> aa(n), rk = in.u;
    std::vector<double> sq(n);
    kernels::attenuate_add(isa, in.u, in.decay, in.source, aa);
    kernels::rk4_linear(isa, rk, in.rate, in.source, 0.013, 37);
    kernels::squared_modulus(isa, in.u, sq);
    CHECK(same_bits(aa.data(), ref_aa.data(), n * sizeof(cdouble)));
    CHECK(same_bits(rk.data(), ref_rk.data(), n * sizeof(cdouble)));
    CHECK(same_bits(sq.data(), ref_sq.data(), n * sizeof(double)));
  }
}

TEST_CASE("scalar kernels against direct expressions") {
  const auto in = make_inputs(11);
  std::vector<cdouble> out(11);
  std::vector<double> sq(11);
  kernels::attenuate_add(Isa::scalar, in.u, in.decay, in.source, out);
  kernels::squared_modulus(Isa::scalar, in.u, sq);
  for (std::size_t k = 0; k < 11; ++k) {
    CHECK(std::abs(out[k] - (in.u[k] * in.decay[k] + in.source[k])) < 1e-15);
    CHECK(sq[k] == doctest::Approx(std::norm(in.u[k])).epsilon(1e-15));
  }
}

TEST_CASE("rk4 converges to the exact linear solution") {
  std::vector<cdouble> u{{1.0, 0.5}};
  const std::vector<double> rate{0.8};
  const std::vector<cdouble> src{{0.2, -0.3}};
  kernels::rk4_linear(Isa::scalar, u, rate, src, 1e-3, 2000);
  const double z = 2.0;
  const cdouble exact = cdouble(1.0, 0.5) * std::exp(-0.8 * z) + src[0] * (1.0 - std::exp(-0.8 * z)) / 0.8;
  CHECK(std::abs(u[0] - exact) < 1e-13);
}

TEST_CASE("scalar is always available and unavailable variants are refused") {
  CHECK(kernels::isa_available(Isa::scalar));
  CHECK(kernels::isa_available(kernels::detect_isa()));
  for (Isa isa : {Isa::avx2, Isa::neon})
    if (!kernels::isa_available(isa)) CHECK_THROWS_AS(kernels::set_active_isa(isa), ValidationError);
  const Isa before = kernels::active_isa();
  kernels::set_active_isa(Isa::scalar);
  CHECK(kernels::active_isa() == Isa::scalar);
  kernels::set_active_isa(before);
}

}
