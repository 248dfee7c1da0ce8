#include "loopphase/propagate.hpp"

#include "loopphase/errors.hpp"
#include "loopphase/kernels.hpp"
#include "loopphase/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace loopphase::propagate {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr cdouble I{0.0, 1.0};

// Per-pixel propagation terms for a pump value `pump` at distance z.
struct PixelTerms {
  double beta;
  double decay;
  double gain;   // alpha Omega12 / (gamma13 Gamma_eff): source per unit pump
  double integral; // (1 - e^{-beta z}) / beta
};

PixelTerms pixel_terms(double pump_modulus, double omega12, const RelaxationConfig& relax,
                       double alpha, double z) {
  const double width = atomcore::EffectiveWidth::of(pump_modulus, relax).value;
  const double beta = alpha * relax.gamma12 / (relax.gamma13 * width);
  const double gain = alpha * omega12 / (relax.gamma13 * width);
  return {beta, std::exp(-beta * z), gain, attenuation_integral(beta, z)};
}

double arg_or_zero(cdouble v) { return v == cdouble(0.0, 0.0) ? 0.0 : std::arg(v); }

void check_pair(const ComplexField& probe, const ComplexField& pump) {
  probe.grid.validate();
  if (!(probe.grid == pump.grid)) throw ValidationError("pump", "grid differs from probe grid");
  if (probe.values.size() != probe.grid.size()) throw ValidationError("probe", "size mismatch");
  if (pump.values.size() != pump.grid.size()) throw ValidationError("pump", "size mismatch");
}

void check_inputs(const ComplexField& probe, const ComplexField& pump,
                  const CouplingConfig& coupling, const RelaxationConfig& relax,
                  const PropagationParams& params) {
  check_pair(probe, pump);
  coupling.validate();
  relax.validate();
  params.validate();
}

cdouble loop_factor(const CouplingConfig& c) {
  return std::polar(1.0, c.phi12 + c.phi23 - c.phi13);
}

RealMap empty_like(const GridSpec& grid) { return RealMap{grid, std::vector<double>(grid.size())}; }

// Bilinear sample at (x, y); the point must lie inside the pixel-center hull.
struct Cell {
  std::size_t i0, j0;
  double tx, ty;
};

Cell locate(const GridSpec& g, double x, double y) {
  const double fx = (x - g.center_x) / g.dx() + 0.5 * static_cast<double>(g.nx - 1);
  const double fy = (y - g.center_y) / g.dy() + 0.5 * static_cast<double>(g.ny - 1);
  auto i0 = static_cast<std::size_t>(std::clamp(std::floor(fx), 0.0, static_cast<double>(g.nx - 2)));
  auto j0 = static_cast<std::size_t>(std::clamp(std::floor(fy), 0.0, static_cast<double>(g.ny - 2)));
  return {i0, j0, fx - static_cast<double>(i0), fy - static_cast<double>(j0)};
}

double bilinear(const RealMap& m, const Cell& c) {
  const auto& g = m.grid;
  const double f00 = m.values[g.index(c.i0, c.j0)];
  const double f10 = m.values[g.index(c.i0 + 1, c.j0)];
  const double f01 = m.values[g.index(c.i0, c.j0 + 1)];
  const double f11 = m.values[g.index(c.i0 + 1, c.j0 + 1)];
  return (1 - c.tx) * (1 - c.ty) * f00 + c.tx * (1 - c.ty) * f10 + (1 - c.tx) * c.ty * f01 +
         c.tx * c.ty * f11;
}

void check_ring(const RealMap& map, double radius, std::size_t n_theta) {
  map.grid.validate();
  if (map.values.size() != map.grid.size()) throw ValidationError("map", "size mismatch");
  if (map.grid.nx < 3 || map.grid.ny < 3) throw ValidationError("map", "grid must be at least 3x3");
  if (!(std::isfinite(radius) && radius > 0.0)) throw ValidationError("radius", "must be positive");
  if (n_theta < 8) throw ValidationError("n_theta", "must be at least 8");
  const double reach_x = map.grid.half_extent - 0.5 * map.grid.dx();
  const double reach_y = map.grid.half_extent - 0.5 * map.grid.dy();
  if (radius > std::min(reach_x, reach_y))
    throw ValidationError("radius", "ring leaves the sampled window");
}

struct Extremum {
  std::size_t index;
  LobeKind kind;
  double value;
};

// Strict extrema of a periodic sequence; plateaus count once at their middle.
std::vector<Extremum> raw_extrema(const std::vector<double>& p) {
  const std::size_t n = p.size();
  std::vector<Extremum> out;
  // Start from a position where the value changes so that runs do not wrap.
  std::size_t start = n;
  for (std::size_t k = 0; k < n; ++k)
    if (p[k] != p[(k + n - 1) % n]) {
      start = k;
      break;
    }
  if (start == n) return out;

  struct Run {
    std::size_t first, len;
    double value;
  };
  std::vector<Run> runs;
  for (std::size_t s = 0; s < n;) {
    const std::size_t k = (start + s) % n;
    std::size_t len = 1;
    while (s + len < n && p[(start + s + len) % n] == p[k]) ++len;
    runs.push_back({k, len, p[k]});
    s += len;
  }
  const std::size_t r = runs.size();
  for (std::size_t k = 0; k < r; ++k) {
    const double prev = runs[(k + r - 1) % r].value;
    const double next = runs[(k + 1) % r].value;
    const Run& run = runs[k];
    const std::size_t mid = (run.first + run.len / 2) % n;
    if (run.value > prev && run.value > next) out.push_back({mid, LobeKind::max, run.value});
    else if (run.value < prev && run.value < next) out.push_back({mid, LobeKind::min, run.value});
  }
  return out;
}

// Vertex of the least-squares parabola through the 2 half + 1 samples centred
// on `centre`, in samples relative to it. half = 1 is the three-point formula;
// wider windows average out the pixel-scale ripple that bilinear sampling puts
// on a broad lobe.
double refine_extremum(const std::vector<double>& p, std::size_t centre, std::size_t half) {
  const std::size_t n = p.size();
  const auto h = static_cast<long>(half);
  double s2 = 0.0, s4 = 0.0, t0 = 0.0, t1 = 0.0, t2 = 0.0;
  for (long d = -h; d <= h; ++d) {
    const double x = static_cast<double>(d);
    const double y = p[(centre + n - half + static_cast<std::size_t>(d + h)) % n];
    s2 += x * x;
    s4 += x * x * x * x;
    t0 += y;
    t1 += x * y;
    t2 += x * x * y;
  }
  const double count = static_cast<double>(2 * half + 1);
  const double curvature = (count * t2 - s2 * t0) / (count * s4 - s2 * s2);
  if (curvature == 0.0) return 0.0;
  const double slope = t1 / s2;
  const double limit = half == 1 ? 0.5 : static_cast<double>(half);
  return std::clamp(-slope / (2.0 * curvature), -limit, limit);
}

// Cancels adjacent max/min pairs with contrast below `threshold`, weakest
// first. Neighbours of the weakest pair always dominate it, so alternation and
// the surviving extreme values are preserved.
void simplify(std::vector<Extremum>& ex, double threshold) {
  while (!ex.empty()) {
    const std::size_t n = ex.size();
    std::size_t best = n;
    double best_gap = threshold;
    for (std::size_t k = 0; k < n; ++k) {
      const double gap = std::abs(ex[k].value - ex[(k + 1) % n].value);
      if (gap < best_gap) {
        best_gap = gap;
        best = k;
      }
    }
    if (best == n) return;
    if (n <= 2) {
      ex.clear();
      return;
    }
    const std::size_t second = (best + 1) % n;
    ex.erase(ex.begin() + static_cast<std::ptrdiff_t>(std::max(best, second)));
    ex.erase(ex.begin() + static_cast<std::ptrdiff_t>(std::min(best, second)));
  }
}

} // namespace

void PropagationParams::validate() const {
  if (!(std::isfinite(alpha) && alpha >= 0.0)) throw ValidationError("propagation.alpha", "must be >= 0");
  if (!(std::isfinite(length) && length > 0.0))
    throw ValidationError("propagation.length", "must be positive");
  if (n_z < 1) throw ValidationError("propagation.n_z", "must be >= 1");
}

PropagationParams PropagationParams::from_optical_depth(double od, double length, int n_z) {
  PropagationParams p;
  p.length = length;
  p.alpha = od / length;
  p.n_z = n_z;
  p.validate();
  return p;
}

PropagationCoefficients coefficients(const CouplingConfig& local, const RelaxationConfig& relax,
                                     const PropagationParams& params) {
  local.validate();
  relax.validate();
  params.validate();
  const auto t = pixel_terms(local.omega23, local.omega12, relax, params.alpha, 0.0);
  return {t.beta, t.gain * local.omega23};
}

double attenuation_integral(double beta, double z) {
  const double x = beta * z;
  if (std::abs(x) < 1e-8) return z * (1.0 - 0.5 * x + x * x / 6.0);
  return -std::expm1(-x) / beta;
}

ComplexField propagate_analytic(const ComplexField& probe, const ComplexField& pump,
                                const CouplingConfig& coupling, const RelaxationConfig& relax,
                                const PropagationParams& params, double z, unsigned jobs) {
  check_inputs(probe, pump, coupling, relax, params);
  if (!(std::isfinite(z) && z >= 0.0 && z <= params.length))
    throw ValidationError("z", "must lie in [0, L]");

  const std::size_t n = probe.values.size();
  const cdouble q = I * loop_factor(coupling);
  std::vector<double> decay(n);
  std::vector<cdouble> source(n);
  parallel_for(n, jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const cdouble p = pump.values[k];
      const auto t = pixel_terms(std::abs(p), coupling.omega12, relax, params.alpha, z);
      decay[k] = t.decay;
      source[k] = q * (t.gain * t.integral) * p;
    }
  });

  ComplexField out(probe.grid);
  parallel_for(n, jobs, [&](std::size_t begin, std::size_t end) {
    const std::size_t len = end - begin;
    kernels::attenuate_add(std::span(probe.values).subspan(begin, len),
                           std::span(decay).subspan(begin, len),
                           std::span(source).subspan(begin, len),
                           std::span(out.values).subspan(begin, len));
  });
  return out;
}

namespace {

ComplexField integrate(const ComplexField& probe, const std::vector<double>& rate,
                       const std::vector<cdouble>& source, double length, int steps,
                       unsigned jobs) {
  ComplexField u = probe;
  const double h = length / steps;
  parallel_for(u.values.size(), jobs, [&](std::size_t begin, std::size_t end) {
    const std::size_t len = end - begin;
    kernels::rk4_linear(std::span(u.values).subspan(begin, len),
                        std::span(rate).subspan(begin, len),
                        std::span(source).subspan(begin, len), h, steps);
  });
  return u;
}

} // namespace

NumericPropagation propagate_numeric(const ComplexField& probe, const ComplexField& pump,
                                     const CouplingConfig& coupling, const RelaxationConfig& relax,
                                     const PropagationParams& params, unsigned jobs) {
  check_inputs(probe, pump, coupling, relax, params);
  const std::size_t n = probe.values.size();
  const cdouble q = I * loop_factor(coupling);
  std::vector<double> rate(n);
  std::vector<cdouble> source(n);
  for (std::size_t k = 0; k < n; ++k) {
    const cdouble p = pump.values[k];
    const auto t = pixel_terms(std::abs(p), coupling.omega12, relax, params.alpha, 0.0);
    rate[k] = t.beta;
    source[k] = q * t.gain * p;
  }

  NumericPropagation out;
  out.field = integrate(probe, rate, source, params.length, params.n_z, jobs);
  const ComplexField fine = integrate(probe, rate, source, params.length, 2 * params.n_z, jobs);
  double diff = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    diff = std::max(diff, std::abs(out.field.values[k] - fine.values[k]));
    scale = std::max(scale, std::abs(fine.values[k]));
  }
  out.step_disagreement = scale > 0.0 ? diff / scale : diff;
  out.step_count_too_small = out.step_disagreement > 1e-6;
  return out;
}

ComplexField propagate_numeric_reference(const ComplexField& probe, const ComplexField& pump,
                                         const CouplingConfig& coupling,
                                         const RelaxationConfig& relax,
                                         const PropagationParams& params) {
  check_inputs(probe, pump, coupling, relax, params);
  const double h = params.length / params.n_z;
  ComplexField out(probe.grid);
  for (std::size_t k = 0; k < probe.values.size(); ++k) {
    const double ref = arg_or_zero(probe.values[k]);
    CouplingConfig local = coupling;
    local.omega23 = std::abs(pump.values[k]);
    local.phi12 = coupling.phi12 + arg_or_zero(pump.values[k]) - ref;
    auto rhs = [&](cdouble u) {
      return I * params.alpha * atomcore::weak_probe_coherence(u, local, relax);
    };
    cdouble u = std::abs(probe.values[k]);
    for (int s = 0; s < params.n_z; ++s) {
      const cdouble k1 = rhs(u);
      const cdouble k2 = rhs(u + 0.5 * h * k1);
      const cdouble k3 = rhs(u + 0.5 * h * k2);
      const cdouble k4 = rhs(u + h * k3);
      u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out.values[k] = u * std::polar(1.0, ref);
  }
  return out;
}

IntensityMap intensity_map(const ComplexField& field) {
  IntensityMap out = empty_like(field.grid);
  if (field.values.size() != field.grid.size()) throw ValidationError("field", "size mismatch");
  kernels::squared_modulus(field.values, out.values);
  return out;
}

PhaseMap phase_map(const ComplexField& field) {
  if (field.values.size() != field.grid.size()) throw ValidationError("field", "size mismatch");
  PhaseMap out{field.grid, std::vector<double>(field.values.size()),
               std::vector<std::uint8_t>(field.values.size())};
  double peak = 0.0;
  for (const auto& v : field.values) peak = std::max(peak, std::abs(v));
  const double floor = 1e-12 * peak;
  for (std::size_t k = 0; k < field.values.size(); ++k) {
    const cdouble v = field.values[k];
    if (peak == 0.0 || std::abs(v) <= floor) continue;
    double a = std::arg(v);
    if (a <= -std::numbers::pi) a = std::numbers::pi;
    out.values[k] = a;
    out.valid[k] = 1;
  }
  return out;
}

RealMap loop_phase_map(const ComplexField& probe, const ComplexField& pump,
                       const CouplingConfig& coupling) {
  check_pair(probe, pump);
  coupling.validate();
  RealMap out = empty_like(probe.grid);
  const double base = coupling.phi12 + coupling.phi23 - coupling.phi13;
  for (std::size_t k = 0; k < out.values.size(); ++k)
    out.values[k] =
        atomcore::wrap_2pi(base + arg_or_zero(pump.values[k]) - arg_or_zero(probe.values[k]));
  return out;
}

namespace {

struct ReducedTerms {
  double attenuated; // A e^{-beta z}
  double scattered;  // S
  double phase;      // local loop phase
};

template <class Fn>
void for_each_reduced(const ComplexField& probe, const ComplexField& pump,
                      const CouplingConfig& coupling, const RelaxationConfig& relax,
                      const PropagationParams& params, double z, Fn&& fn) {
  check_inputs(probe, pump, coupling, relax, params);
  if (!(std::isfinite(z) && z >= 0.0 && z <= params.length))
    throw ValidationError("z", "must lie in [0, L]");
  const double base = coupling.phi12 + coupling.phi23 - coupling.phi13;
  for (std::size_t k = 0; k < probe.values.size(); ++k) {
    const cdouble p = pump.values[k];
    const auto t = pixel_terms(std::abs(p), coupling.omega12, relax, params.alpha, z);
    const double phase = base + arg_or_zero(p) - arg_or_zero(probe.values[k]);
    fn(k, ReducedTerms{std::abs(probe.values[k]) * t.decay, t.gain * t.integral * std::abs(p),
                       phase});
  }
}

} // namespace

IntensityTerms intensity_terms(const ComplexField& probe, const ComplexField& pump,
                               const CouplingConfig& coupling, const RelaxationConfig& relax,
                               const PropagationParams& params, double z) {
  IntensityTerms out{empty_like(probe.grid), empty_like(probe.grid), empty_like(probe.grid)};
  for_each_reduced(probe, pump, coupling, relax, params, z, [&](std::size_t k, ReducedTerms t) {
    out.beer_lambert.values[k] = t.attenuated * t.attenuated;
    out.interference.values[k] = -2.0 * t.attenuated * t.scattered * std::sin(t.phase);
    out.scattering.values[k] = t.scattered * t.scattered;
  });
  return out;
}

RealMap reduced_phase_formula(const ComplexField& probe, const ComplexField& pump,
                              const CouplingConfig& coupling, const RelaxationConfig& relax,
                              const PropagationParams& params, double z) {
  RealMap out = empty_like(probe.grid);
  for_each_reduced(probe, pump, coupling, relax, params, z, [&](std::size_t k, ReducedTerms t) {
    out.values[k] = std::atan2(t.scattered * std::cos(t.phase),
                               t.attenuated - t.scattered * std::sin(t.phase));
  });
  return out;
}

std::vector<double> ring_profile(const RealMap& map, double radius, std::size_t n_theta) {
  check_ring(map, radius, n_theta);
  std::vector<double> out(n_theta);
  for (std::size_t k = 0; k < n_theta; ++k) {
    const double theta = two_pi * static_cast<double>(k) / static_cast<double>(n_theta);
    const double x = map.grid.center_x + radius * std::cos(theta);
    const double y = map.grid.center_y + radius * std::sin(theta);
    out[k] = bilinear(map, locate(map.grid, x, y));
  }
  return out;
}

double ring_interpolation_error(const RealMap& map, double radius, std::size_t n_theta) {
  check_ring(map, radius, n_theta);
  const auto& g = map.grid;
  auto value = [&](std::size_t i, std::size_t j) { return map.values[g.index(i, j)]; };
  auto dxx = [&](std::size_t i, std::size_t j) {
    i = std::clamp<std::size_t>(i, 1, g.nx - 2);
    return std::abs(value(i + 1, j) - 2.0 * value(i, j) + value(i - 1, j));
  };
  auto dyy = [&](std::size_t i, std::size_t j) {
    j = std::clamp<std::size_t>(j, 1, g.ny - 2);
    return std::abs(value(i, j + 1) - 2.0 * value(i, j) + value(i, j - 1));
  };
  double bound = 0.0;
  for (std::size_t k = 0; k < n_theta; ++k) {
    const double theta = two_pi * static_cast<double>(k) / static_cast<double>(n_theta);
    const Cell c = locate(g, g.center_x + radius * std::cos(theta), g.center_y + radius * std::sin(theta));
    double mx = 0.0, my = 0.0;
    for (std::size_t di = 0; di < 2; ++di)
      for (std::size_t dj = 0; dj < 2; ++dj) {
        mx = std::max(mx, dxx(c.i0 + di, c.j0 + dj));
        my = std::max(my, dyy(c.i0 + di, c.j0 + dj));
      }
    bound = std::max(bound, (mx + my) / 8.0);
  }
  return bound;
}

std::vector<Lobe> lobe_angles(const RealMap& map, double radius, const RingOptions& options) {
  const auto profile = ring_profile(map, radius, options.n_theta);
  double peak = 0.0;
  for (double v : profile) peak = std::max(peak, std::abs(v));
  const double threshold = std::max(options.noise_floor * peak,
                                    2.0 * ring_interpolation_error(map, radius, options.n_theta));

  auto extrema = raw_extrema(profile);
  simplify(extrema, threshold);

  const std::size_t n = profile.size();
  const double step = two_pi / static_cast<double>(n);
  const std::size_t widest = std::max<std::size_t>(1, n / 48);
  std::vector<Lobe> out;
  out.reserve(extrema.size());
  for (std::size_t k = 0; k < extrema.size(); ++k) {
    const auto& e = extrema[k];
    std::size_t gap = n;
    for (std::size_t other : {(k + 1) % extrema.size(), (k + extrema.size() - 1) % extrema.size()}) {
      if (other == k) continue;
      const std::size_t d = (extrema[other].index + n - e.index) % n;
      gap = std::min({gap, d, n - d});
    }
    const std::size_t half = std::clamp<std::size_t>(gap / 4, 1, widest);
    const double offset = refine_extremum(profile, e.index, half);
    out.push_back({atomcore::wrap_2pi((static_cast<double>(e.index) + offset) * step), e.kind, profile[e.index]});
  }
  std::sort(out.begin(), out.end(), [](const Lobe& a, const Lobe& b) { return a.angle < b.angle; });
  return out;
}

double visibility(const RealMap& map, double radius, const RingOptions& options) {
  const auto profile = ring_profile(map, radius, options.n_theta);
  const auto [lo, hi] = std::minmax_element(profile.begin(), profile.end());
  if (*hi + *lo <= 0.0) return 0.0;
  if (lobe_angles(map, radius, options).empty()) return 0.0;
  return (*hi - *lo) / (*hi + *lo);
}

Scene Scene::reference(int l, double optical_depth) {
  Scene s;
  s.probe_mode = {l, 0, 100.0, 0.78, 1.0};
  s.pump_mode = {0, 0, 100.0, 0.78, 1.0};
  s.probe_rabi = 0.1;
  s.pump_rabi = 5.0;
  s.coupling = {0.1, 5.0, 0.1, 0.0, 0.0, 0.0};
  s.params = PropagationParams::from_optical_depth(optical_depth);
  s.grid = {512, 512, 300.0, 0.0, 0.0};
  return s;
}

void Scene::validate() const {
  probe_mode.validate();
  pump_mode.validate();
  if (!(std::isfinite(probe_rabi) && probe_rabi >= 0.0))
    throw ValidationError("probe.rabi", "must be finite and >= 0");
  if (!(std::isfinite(pump_rabi) && pump_rabi >= 0.0))
    throw ValidationError("pump.rabi", "must be finite and >= 0");
  coupling.validate();
  relax.validate();
  params.validate();
  grid.validate();
  if (!std::isfinite(plane_z)) throw ValidationError("plane_z", "must be finite");
}

beamlab::LGModeSpec Scene::scaled_probe() const { return beamlab::with_peak_rabi(probe_mode, probe_rabi); }
beamlab::LGModeSpec Scene::scaled_pump() const { return beamlab::with_peak_rabi(pump_mode, pump_rabi); }

double Scene::ring_radius() const {
  return probe_mode.w0 * std::sqrt(std::abs(probe_mode.l) / 2.0);
}

Rendering render(const Scene& scene) {
  scene.validate();
  Rendering r;
  r.probe_in = beamlab::sample_field(scene.scaled_probe(), scene.grid, scene.plane_z, scene.jobs);
  r.pump = beamlab::sample_field(scene.scaled_pump(), scene.grid, scene.plane_z, scene.jobs);
  r.probe_out = propagate_analytic(r.probe_in, r.pump, scene.coupling, scene.relax, scene.params,
                                   scene.params.length, scene.jobs);
  r.intensity_in = intensity_map(r.probe_in);
  r.intensity_out = intensity_map(r.probe_out);
  r.phase_in = phase_map(r.probe_in);
  r.phase_out = phase_map(r.probe_out);
  r.input_peak_intensity = *std::max_element(r.intensity_in.values.begin(), r.intensity_in.values.end());
  return r;
}

RealMap normalized(const RealMap& map, double peak) {
  RealMap out = map;
  if (peak != 0.0)
    for (double& v : out.values) v /= peak;
  return out;
}

cdouble output_at(const Scene& scene, double x, double y) {
  const double dx = x - scene.grid.center_x;
  const double dy = y - scene.grid.center_y;
  const double r = std::hypot(dx, dy);
  const double theta = std::atan2(dy, dx);
  const cdouble probe = beamlab::evaluate_mode(scene.scaled_probe(), r, theta, scene.plane_z);
  const cdouble pump = beamlab::evaluate_mode(scene.scaled_pump(), r, theta, scene.plane_z);
  const double z = scene.params.length;
  const auto t = pixel_terms(std::abs(pump), scene.coupling.omega12, scene.relax, scene.params.alpha, z);
  return probe * t.decay + I * loop_factor(scene.coupling) * (t.gain * t.integral) * pump;
}

} // namespace loopphase::propagate
