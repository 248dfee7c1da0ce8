#include "loopphase/acceptance.hpp"

#include "loopphase/atomcore.hpp"
#include "loopphase/beamlab.hpp"
#include "loopphase/errors.hpp"
#include "loopphase/holonomy.hpp"
#include "loopphase/propagate.hpp"
#include "loopphase/protocol.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

namespace loopphase::acceptance {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2.0 * pi;

using atomcore::CouplingConfig;
using atomcore::RelaxationConfig;
using holonomy::Magnitudes;
using holonomy::circular_distance;
using propagate::Lobe;
using propagate::LobeKind;
using propagate::Scene;

struct Suite {
  std::vector<Check> checks;
  unsigned jobs = 0;

  void check(std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  }
};

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Smallest circular distance from `target` to any lobe of the given kind.
double nearest(const std::vector<Lobe>& lobes, LobeKind kind, double target) {
  double best = INFINITY;
  for (const auto& l : lobes)
    if (l.kind == kind) best = std::min(best, circular_distance(l.angle, target));
  return best;
}

std::string angles(const std::vector<Lobe>& lobes) {
  std::string out;
  for (const auto& l : lobes)
    out += fmt::format("{}{}@{:.4f}", out.empty() ? "" : " ", l.kind == LobeKind::max ? "max" : "min", l.angle);
  return out.empty() ? "none" : out;
}

// -- 1 -------------------------------------------------------------------------

void normalization(Suite& s) {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string where;
  for (int l = -3; l <= 3; ++l)
    for (int m = 0; m <= 2; ++m) {
      const double err = std::abs(beamlab::mode_norm({l, m, 1.0, 1.0, 1.0}) - 1.0);
      if (err > worst) {
        worst = err;
        where = fmt::format("l={} m={}", l, m);
      }
    }
  s.check("unit norm for |l|<=3, m<=2", worst < 1e-6, fmt::format("max |norm - 1| = {:.3e} ({})", worst, where));
  const double t = elapsed(start);
  s.check("runtime < 5 s", t < 5.0, fmt::format("{:.3f} s", t));
}

// -- 2 -------------------------------------------------------------------------

void propagation_oracle(Suite& s) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_ref = 0.0, worst_kernel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const double od = 0.1 * std::pow(200.0, unit(rng)); // log-uniform on [0.1, 20]
    Scene scene = Scene::reference(static_cast<int>(unit(rng) * 4.0), od);
    scene.grid = {48, 48, 300.0, 0.0, 0.0};
    scene.probe_rabi = 0.01 + 0.2 * unit(rng);
    scene.pump_rabi = 0.5 + 9.5 * unit(rng);
    scene.coupling.omega12 = 0.01 + unit(rng);
    scene.coupling.phi12 = two_pi * unit(rng);
    scene.coupling.phi23 = two_pi * unit(rng);
    scene.coupling.phi13 = two_pi * unit(rng);
    scene.relax = RelaxationConfig::with_gamma12(std::pow(10.0, -4.0 + 2.0 * unit(rng)));
    scene.params.n_z = 1024;
    scene.jobs = s.jobs;

    const auto probe = beamlab::sample_field(scene.scaled_probe(), scene.grid);
    const auto pump = beamlab::sample_field(scene.scaled_pump(), scene.grid);
    const auto analytic = propagate::propagate_analytic(probe, pump, scene.coupling, scene.relax,
                                                        scene.params, scene.params.length, s.jobs);
    const auto reference =
        propagate::propagate_numeric_reference(probe, pump, scene.coupling, scene.relax, scene.params);
    const auto kernel =
        propagate::propagate_numeric(probe, pump, scene.coupling, scene.relax, scene.params, s.jobs);
    double scale = 0.0, d_ref = 0.0, d_kernel = 0.0;
    for (std::size_t k = 0; k < analytic.values.size(); ++k) {
      scale = std::max(scale, std::abs(analytic.values[k]));
      d_ref = std::max(d_ref, std::abs(reference.values[k] - analytic.values[k]));
      d_kernel = std::max(d_kernel, std::abs(kernel.field.values[k] - analytic.values[k]));
    }
    worst_ref = std::max(worst_ref, d_ref / scale);
    worst_kernel = std::max(worst_kernel, d_kernel / scale);
  }
  s.check("closed form vs per-substep coherence RK4", worst_ref < 1e-8,
          fmt::format("max relative error {:.3e} over 20 configs", worst_ref));
  s.check("closed form vs vectorized RK4", worst_kernel < 1e-8,
          fmt::format("max relative error {:.3e} over 20 configs", worst_kernel));
  const double t = elapsed(start);
  s.check("runtime < 30 s", t < 30.0, fmt::format("{:.3f} s", t));
}

// -- 3 -------------------------------------------------------------------------

double weak_probe_error(double omega13, double phase) {
  const auto config = CouplingConfig::with_loop_phase(0.1, 5.0, omega13, phase);
  const RelaxationConfig relax;
  const auto exact = atomcore::probe_coherence(atomcore::steady_state(config, relax));
  const auto approx = atomcore::weak_probe_coherence(config, relax);
  return std::abs(exact - approx) / std::abs(exact);
}

void weak_probe(Suite& s) {
  for (double phase : {0.0, pi / 2.0, pi, 3.0 * pi / 2.0}) {
    const double e_small = weak_probe_error(0.01, phase);
    const double e_large = weak_probe_error(0.1, phase);
    s.check(fmt::format("Phi={:.4f}: error < 1% at omega13=0.01", phase), e_small < 0.01,
            fmt::format("relative error {:.3e}", e_small));
    s.check(fmt::format("Phi={:.4f}: error grows with omega13", phase), e_small < e_large,
            fmt::format("{:.3e} (0.01) vs {:.3e} (0.1)", e_small, e_large));
  }
}

// -- 4 -------------------------------------------------------------------------

void lobe_positions(Suite& s) {
  const propagate::RingOptions ring;
  const double step = two_pi / static_cast<double>(ring.n_theta);
  {
    const auto start = std::chrono::steady_clock::now();
    Scene scene = Scene::reference(1, 1.0);
    scene.jobs = s.jobs;
    const auto r = propagate::render(scene);
    const auto lobes = propagate::lobe_angles(r.intensity_out, scene.ring_radius(), ring);
    const double t = elapsed(start);
    const double bright = nearest(lobes, LobeKind::max, pi / 2.0);
    const double dark = nearest(lobes, LobeKind::min, 3.0 * pi / 2.0);
    s.check("l=1 OD=1 bright lobe at pi/2", bright < step,
            fmt::format("offset {:.2e} rad (step {:.2e}); lobes {}", bright, step, angles(lobes)));
    s.check("l=1 OD=1 dark lobe at 3pi/2", dark < step, fmt::format("offset {:.2e} rad", dark));
    s.check("l=1 map runtime < 20 s", t < 20.0, fmt::format("{:.3f} s", t));
  }
  {
    const auto start = std::chrono::steady_clock::now();
    Scene scene = Scene::reference(2, 5.0);
    scene.jobs = s.jobs;
    const auto r = propagate::render(scene);
    const double main_ring = scene.ring_radius();
    const auto lobes = propagate::lobe_angles(r.intensity_out, main_ring, ring);
    const double t = elapsed(start);
    const double b1 = nearest(lobes, LobeKind::max, pi / 4.0);
    const double b2 = nearest(lobes, LobeKind::max, 5.0 * pi / 4.0);
    s.check("l=2 OD=5 bright lobes at pi/4, 5pi/4", std::max(b1, b2) < step,
            fmt::format("offsets {:.2e}, {:.2e} rad; lobes {}", b1, b2, angles(lobes)));

    // Outer-ring maxima at 3pi/4 and 7pi/4: scan every ring outside the main one.
    const double dr = 0.05 * scene.probe_mode.w0;
    const double limit = scene.grid.half_extent - scene.grid.dx();
    int rings = 0;
    bool found = false;
    std::string seen;
    for (double radius = main_ring + dr; radius <= limit; radius += dr) {
      ++rings;
      const auto outer = propagate::lobe_angles(r.intensity_out, radius, ring);
      if (nearest(outer, LobeKind::max, 3.0 * pi / 4.0) < step &&
          nearest(outer, LobeKind::max, 7.0 * pi / 4.0) < step) {
        found = true;
        seen = fmt::format("r={:.1f}: {}", radius, angles(outer));
        break;
      }
      if (seen.empty() && !outer.empty()) seen = fmt::format("e.g. r={:.1f}: {}", radius, angles(outer));
    }
    s.check("l=2 OD=5 outer-ring bright lobes at 3pi/4, 7pi/4", found,
            fmt::format("{} rings scanned from {:.1f} to {:.1f}; {}", rings, main_ring + dr, limit,
                        seen.empty() ? "no extrema" : seen));
    s.check("l=2 map runtime < 20 s", t < 20.0, fmt::format("{:.3f} s", t));
  }
}

// -- 5 -------------------------------------------------------------------------

double max_rotation_error(const std::vector<Lobe>& before, const std::vector<Lobe>& after, double shift,
                          bool& matched) {
  matched = !before.empty() && before.size() == after.size();
  double worst = 0.0;
  for (const auto& a : before) {
    const double d = nearest(after, a.kind, a.angle + shift);
    worst = std::max(worst, d);
  }
  return worst;
}

void lobe_rotation(Suite& s) {
  const propagate::RingOptions ring;
  const double step = two_pi / static_cast<double>(ring.n_theta);
  auto lobes_for = [&](int l, double phi12) {
    Scene scene = Scene::reference(l, 1.0);
    scene.coupling.phi12 = phi12;
    scene.jobs = s.jobs;
    return propagate::lobe_angles(propagate::render(scene).intensity_out, scene.ring_radius(), ring);
  };
  const auto a = lobes_for(1, pi / 3.0);
  const auto b = lobes_for(1, 5.0 * pi / 6.0);
  bool matched = false;
  const double err = max_rotation_error(a, b, pi / 2.0, matched);
  s.check("l=1: phi12 pi/3 -> 5pi/6 rotates extrema by pi/2", matched && err < step,
          fmt::format("max deviation {:.2e} rad over {} extrema; before {}; after {}", err, a.size(),
                      angles(a), angles(b)));

  // Rotation law for a higher charge: delta theta = delta phi12 / l.
  const auto c = lobes_for(2, pi / 3.0);
  const auto d = lobes_for(2, 5.0 * pi / 6.0);
  const double err2 = max_rotation_error(c, d, pi / 4.0, matched);
  s.check("l=2: same shift rotates extrema by pi/4", matched && err2 < step,
          fmt::format("max deviation {:.2e} rad over {} extrema", err2, c.size()));
}

// -- 6 -------------------------------------------------------------------------

void visibility_trend(Suite& s) {
  auto vis = [&](int l, double od) {
    Scene scene = Scene::reference(l, od);
    scene.jobs = s.jobs;
    return propagate::visibility(propagate::render(scene).intensity_out, scene.ring_radius());
  };
  const double v1a = vis(1, 0.5), v1b = vis(1, 10.0);
  const double v2a = vis(2, 20.0), v2b = vis(2, 1.0);
  s.check("l=1: V(OD=0.5) > V(OD=10)", v1a > v1b, fmt::format("{:.6f} vs {:.6f}", v1a, v1b));
  s.check("l=2: V(OD=20) > V(OD=1)", v2a > v2b, fmt::format("{:.6f} vs {:.6f}", v2a, v2b));
}

// -- 7 -------------------------------------------------------------------------

void spectrum(Suite& s) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mag(0.05, 5.0), ang(0.0, two_pi);
  double worst_res = 0.0, worst_sum = 0.0;
  for (int k = 0; k < 200; ++k) {
    CouplingConfig c{mag(rng), mag(rng), mag(rng), ang(rng), ang(rng), ang(rng)};
    const auto roots = atomcore::eigen_spectrum(c);
    for (double r : roots) worst_res = std::max(worst_res, atomcore::characteristic_residual(c, r));
    worst_sum = std::max(worst_sum, std::abs(roots[0] + roots[1] + roots[2]));
  }
  s.check("cubic residuals < 1e-10", worst_res < 1e-10, fmt::format("max {:.3e} over 200 configs", worst_res));
  s.check("eigenvalue sum < 1e-12", worst_sum < 1e-12, fmt::format("max {:.3e}", worst_sum));

  auto smallest = [](const CouplingConfig& c) {
    const auto r = atomcore::eigen_spectrum(c);
    return std::min({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
  };
  double worst_dark = 0.0, least_bright = INFINITY;
  for (int k = 0; k < 100; ++k) {
    const double a = mag(rng), b = mag(rng), c = mag(rng);
    worst_dark = std::max(worst_dark, smallest(CouplingConfig::with_loop_phase(a, b, c, pi / 2.0)));
    least_bright = std::min(least_bright, smallest(CouplingConfig::with_loop_phase(a, b, c, 0.0)));
  }
  s.check("|Lambda_min| < 1e-10 at Phi = pi/2", worst_dark < 1e-10, fmt::format("max {:.3e}", worst_dark));
  s.check("|Lambda_min| > 1e-3 at Phi = 0", least_bright > 1e-3, fmt::format("min {:.3e}", least_bright));

  double worst_equal = 0.0;
  for (double w : {0.3, 0.7, 1.0, 2.5, 5.0}) {
    const auto r = atomcore::eigen_spectrum(CouplingConfig::with_loop_phase(w, w, w, 0.0));
    worst_equal = std::max({worst_equal, std::abs(r[0] + w), std::abs(r[1] + w), std::abs(r[2] - 2.0 * w)});
  }
  s.check("equal Rabi at Phi = 0 gives {-1, -1, 2} Omega", worst_equal < 1e-10,
          fmt::format("max deviation {:.3e}", worst_equal));
}

// -- 8 -------------------------------------------------------------------------

void dark_state(Suite& s) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> mag(0.01, 5.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double a = mag(rng), b = mag(rng), c = mag(rng);
    for (double phase : {pi / 2.0, 3.0 * pi / 2.0}) {
      const auto config = CouplingConfig::with_loop_phase(a, b, c, phase);
      const auto d = atomcore::dark_state(config);
      worst = std::max(worst, (atomcore::build_hamiltonian_reduced(config) * d).norm());
    }
  }
  s.check("||H'D|| < 1e-12 over 100 triples", worst < 1e-12, fmt::format("max {:.3e}", worst));
}

// -- 9 -------------------------------------------------------------------------

void berry_phase(Suite& s) {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (double r : {0.25, 1.0, 4.0})
    for (const Magnitudes& m : {Magnitudes{r, 1.0, 1.0}, Magnitudes{1.0, r, 1.0}, Magnitudes{1.0, 1.0, r}})
      worst = std::max(worst, circular_distance(holonomy::berry_phase_wilson(m, 10000),
                                                holonomy::berry_phase_closed(m)));
  s.check("Wilson (n=1e4) vs closed form for ratios {0.25, 1, 4}", worst < 1e-4,
          fmt::format("max deviation {:.3e} rad", worst));

  const double equal = atomcore::wrap_2pi(holonomy::berry_phase_closed({1.0, 1.0, 1.0}));
  s.check("equal Rabi gives 2pi/3", circular_distance(equal, two_pi / 3.0) < 1e-12,
          fmt::format("{:.15f}", equal));
  const Magnitudes open{0.0, 1.0, 1.0};
  const double closed0 = circular_distance(holonomy::berry_phase_closed(open), 0.0);
  const double wilson0 = circular_distance(holonomy::berry_phase_wilson(open, 10000), 0.0);
  s.check("omega12 -> 0 gives 0 mod 2pi", closed0 < 1e-12 && wilson0 < 1e-12,
          fmt::format("closed {:.2e}, wilson {:.2e}", closed0, wilson0));
  const double t = elapsed(start);
  s.check("runtime < 5 s", t < 5.0, fmt::format("{:.3f} s", t));
}

// -- 10 ------------------------------------------------------------------------

void adiabatic(Suite& s) {
  const auto start = std::chrono::steady_clock::now();
  holonomy::AdiabaticOptions options;
  options.total_time = 2000.0;
  options.n_steps = 200000;
  const auto r = holonomy::adiabatic_evolve({1.0, 1.0, 1.0}, options);
  const double t = elapsed(start);
  const double err = circular_distance(r.accumulated_phase, two_pi / 3.0);
  s.check("fidelity >= 0.999", r.adiabatic_fidelity >= 0.999, fmt::format("{:.9f}", r.adiabatic_fidelity));
  s.check("geometric phase within 1e-2 of 2pi/3", err < 1e-2,
          fmt::format("accumulated {:.6f}, deviation {:.3e}", r.accumulated_phase_mod(), err));
  s.check("|dynamical phase| < 1e-3", std::abs(r.dynamical_phase) < 1e-3,
          fmt::format("{:.3e}", r.dynamical_phase));
  s.check("runtime < 60 s", t < 60.0, fmt::format("{:.3f} s", t));
}

// -- 11 ------------------------------------------------------------------------

void gauge(Suite& s) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-pi, pi);
  Scene base = Scene::reference(1, 2.0);
  base.grid = {128, 128, 300.0, 0.0, 0.0};
  base.coupling.phi12 = 0.4;
  base.coupling.phi23 = -1.1;
  base.coupling.phi13 = 0.25;
  base.jobs = s.jobs;
  const auto ref = propagate::render(base);

  double worst_i = 0.0, worst_p = 0.0, worst_s = 0.0, worst_full = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double a = ang(rng), b = ang(rng);
    Scene g = base;
    g.coupling.phi12 += a;
    g.coupling.phi23 += b;
    g.coupling.phi13 += a + b;
    const auto r = propagate::render(g);
    const double peak = *std::max_element(ref.intensity_out.values.begin(), ref.intensity_out.values.end());
    for (std::size_t p = 0; p < r.intensity_out.values.size(); ++p) {
      worst_i = std::max(worst_i, std::abs(r.intensity_out.values[p] - ref.intensity_out.values[p]) / peak);
      if (ref.phase_out.valid[p] && r.phase_out.valid[p])
        worst_p = std::max(worst_p, circular_distance(r.phase_out.values[p], ref.phase_out.values[p]));
    }
    const auto e0 = atomcore::eigen_spectrum(base.coupling);
    const auto e1 = atomcore::eigen_spectrum(g.coupling);
    for (int j = 0; j < 3; ++j) worst_s = std::max(worst_s, std::abs(e0[j] - e1[j]));

    Eigen::SelfAdjointEigenSolver<atomcore::Matrix3c> s0(atomcore::build_hamiltonian_full(base.coupling),
                                                         Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<atomcore::Matrix3c> s1(atomcore::build_hamiltonian_full(g.coupling),
                                                         Eigen::EigenvaluesOnly);
    worst_full = std::max(worst_full, (s0.eigenvalues() - s1.eigenvalues()).cwiseAbs().maxCoeff());
  }
  s.check("intensity map invariant", worst_i < 1e-12, fmt::format("max relative change {:.3e}", worst_i));
  s.check("phase map invariant", worst_p < 1e-12, fmt::format("max change {:.3e} rad", worst_p));
  s.check("cubic spectrum invariant", worst_s < 1e-12, fmt::format("max change {:.3e}", worst_s));
  s.check("full Hamiltonian spectrum invariant", worst_full < 1e-12, fmt::format("max change {:.3e}", worst_full));
}

// -- 12 ------------------------------------------------------------------------

void protocol_end_to_end(Suite& s) {
  protocol::ProtocolOptions options;
  options.scene.jobs = s.jobs;
  const double step = two_pi / static_cast<double>(options.ring.n_theta);
  const auto report = protocol::run_protocol(pi / 4.0, options);
  s.check("protocol completes", report.completed, report.diagnostic.empty() ? "ok" : report.diagnostic);
  s.check("recovered gamma within 0.05 rad", report.completed && report.recovery_error < 0.05,
          fmt::format("recovered {:.6f}, closed {:.6f}, error {:.3e}", report.recovered_gamma,
                      report.gamma_closed_mod, report.recovery_error));

  double worst = 0.0;
  bool all_found = true;
  for (int k = 0; k < 16; ++k) {
    const double c = k * pi / 8.0;
    const auto a = protocol::stage_map(c, options.scene, options.ring);
    all_found = all_found && a.found;
    worst = std::max(worst, circular_distance(a.c_estimate, c));
  }
  s.check("stage-A error < angular step over c = k pi/8", all_found && worst < step,
          fmt::format("max error {:.3e} rad (step {:.3e})", worst, step));

  // k pi/8 sits on the pixel grid's symmetry axes; offsets between them do not.
  double worst_off = 0.0;
  for (double c : {0.3, 0.5, 1.0, 2.0, 2.5, 4.0, 5.3}) {
    const auto a = protocol::stage_map(c, options.scene, options.ring);
    all_found = all_found && a.found;
    worst_off = std::max(worst_off, circular_distance(a.c_estimate, c));
  }
  s.check("stage-A error < angular step between the symmetry axes", all_found && worst_off < step,
          fmt::format("max error {:.3e} rad", worst_off));
  const auto off = protocol::run_protocol(2.0, options);
  s.check("protocol completes off the symmetry axes", off.completed && off.recovery_error < 0.05,
          fmt::format("c = 2: error {:.3e}, bound {:.3e}{}", off.recovery_error, off.error_bound,
                      off.diagnostic.empty() ? "" : "; " + off.diagnostic));
}

struct Entry {
  int id;
  const char* title;
  std::function<void(Suite&)> run;
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries{
      {1, "LG mode normalization", normalization},
      {2, "propagation oracle equivalence", propagation_oracle},
      {3, "weak-probe validity", weak_probe},
      {4, "lobe positions", lobe_positions},
      {5, "lobe rotation", lobe_rotation},
      {6, "OD visibility trend", visibility_trend},
      {7, "spectrum", spectrum},
      {8, "dark state", dark_state},
      {9, "Berry phase", berry_phase},
      {10, "adiabatic check", adiabatic},
      {11, "gauge invariance", gauge},
      {12, "end-to-end protocol", protocol_end_to_end},
  };
  return entries;
}

const Entry& lookup(int id) {
  for (const auto& e : registry())
    if (e.id == id) return e;
  throw ValidationError("criterion", "no criterion " + std::to_string(id));
}

} // namespace

std::vector<int> criterion_ids() {
  std::vector<int> out;
  for (const auto& e : registry()) out.push_back(e.id);
  return out;
}

std::string criterion_title(int id) { return lookup(id).title; }

CriterionResult run_criterion(int id, unsigned jobs) {
  const Entry& e = lookup(id);
  CriterionResult out;
  out.id = id;
  out.title = e.title;
  Suite suite;
  suite.jobs = jobs;
  const auto start = std::chrono::steady_clock::now();
  try {
    e.run(suite);
  } catch (const std::exception& ex) {
    suite.check("no exception", false, ex.what());
  }
  out.seconds = elapsed(start);
  out.checks = std::move(suite.checks);
  out.passed = !out.checks.empty() &&
               std::all_of(out.checks.begin(), out.checks.end(), [](const Check& c) { return c.passed; });
  return out;
}

std::string format_result(const CriterionResult& r, bool verbose) {
  std::string out = fmt::format("{}  {:>2}  {}  ({:.2f} s)\n", r.passed ? "PASS" : "FAIL", r.id, r.title, r.seconds);
  if (verbose)
    for (const auto& c : r.checks)
      out += fmt::format("        [{}] {}: {}\n", c.passed ? "ok" : "FAILED", c.name, c.detail);
  return out;
}

} // namespace loopphase::acceptance
