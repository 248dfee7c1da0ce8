// loopphase: command-line front end.
//
// Exit codes: 0 success, 2 usage, 3 validation failure, 4 I/O.

#include "loopphase/acceptance.hpp"
#include "loopphase/artifacts.hpp"
#include "loopphase/errors.hpp"
#include "loopphase/holonomy.hpp"
#include "loopphase/kernels.hpp"
#include "loopphase/parallel.hpp"
#include "loopphase/propagate.hpp"
#include "loopphase/protocol.hpp"

#include "CLI11.hpp"
#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
namespace art = loopphase::artifacts;
using namespace loopphase;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 2;
constexpr int exit_validation = 3;
constexpr int exit_io = 4;

constexpr const char* reproductions = R"(Reproductions (reference parameters are the defaults):
  vortex probe, l=1, OD=1, bright lobe near pi/2   loopphase render --l 1 --od 1
  l=2 probe at OD=5, lobes near pi/4 and 5pi/4      loopphase render --l 2 --od 5
  optical-depth series for l=1 and l=2              loopphase sweep --l 1 --od-list 0.5,1,5,10
                                                    loopphase sweep --l 2 --od-list 1,5,10,20
  lobe rotation with the 1-2 coupling phase         loopphase render --l 1 --phi12 60deg
                                                    loopphase render --l 1 --phi12 150deg
  eigenvalue sheets over the phase torus            loopphase spectrum --omega 0.1,5,0.1
                                                    loopphase spectrum --equal-rabi
  dark-state loops on the torus                     loopphase torus --resolution 100
  Berry phase, closed form / Wilson / adiabatic     loopphase berry --equal-rabi
  three-stage measurement protocol                  loopphase protocol --c 0.7854
  acceptance suite                                  loopphase validate
)";

struct Common {
  std::string config_path;
  std::string out_dir = "out";
  unsigned jobs = 0;
  std::string kernel = "auto";
  std::string format;
};

// Overrides shared by the beam-rendering commands; unset flags keep config values.
struct SceneFlags {
  std::optional<int> l, m, pump_l, grid;
  std::optional<double> od, omega12, omega13, omega23, ring_radius, gamma12;
  std::optional<std::string> phi12, phi23, phi13;
  std::optional<std::size_t> n_theta;

  void add(CLI::App* app) {
    app->add_option("--l", l, "probe topological charge");
    app->add_option("--m", m, "probe radial index");
    app->add_option("--pump-l", pump_l, "pump topological charge");
    app->add_option("--od", od, "optical depth alpha*L")->check(CLI::NonNegativeNumber);
    app->add_option("--omega12", omega12, "1-2 Rabi frequency")->check(CLI::NonNegativeNumber);
    app->add_option("--omega13", omega13, "peak probe Rabi frequency")->check(CLI::NonNegativeNumber);
    app->add_option("--omega23", omega23, "peak pump Rabi frequency")->check(CLI::NonNegativeNumber);
    app->add_option("--gamma12", gamma12, "ground-state decoherence rate")->check(CLI::PositiveNumber);
    app->add_option("--phi12", phi12, "1-2 coupling phase (radians, or e.g. 60deg)");
    app->add_option("--phi23", phi23, "pump phase");
    app->add_option("--phi13", phi13, "probe phase");
    app->add_option("--grid", grid, "pixels per side")->check(CLI::Range(3, 8192));
    app->add_option("--n-theta", n_theta, "ring samples for lobe detection")->check(CLI::Range(8, 1 << 20));
    app->add_option("--ring-radius", ring_radius, "ring radius (default w0 sqrt(|l|/2))")
        ->check(CLI::PositiveNumber);
  }

  void apply(art::RunConfig& c) const {
    if (l) c.probe.l = *l;
    if (m) c.probe.m = *m;
    if (pump_l) c.pump.l = *pump_l;
    if (od) c.propagation.alpha = *od / c.propagation.length;
    if (omega12) c.coupling.omega12 = *omega12;
    if (omega13) c.coupling.omega13 = *omega13;
    if (omega23) c.coupling.omega23 = *omega23;
    if (gamma12) c.relaxation.gamma12 = *gamma12;
    if (phi12) c.coupling.phi12 = art::parse_angle(*phi12);
    if (phi23) c.coupling.phi23 = art::parse_angle(*phi23);
    if (phi13) c.coupling.phi13 = art::parse_angle(*phi13);
    if (grid) c.grid.nx = c.grid.ny = static_cast<std::size_t>(*grid);
    if (n_theta) c.ring.n_theta = *n_theta;
    if (ring_radius) c.ring_radius = *ring_radius;
  }
};

struct MagnitudeFlags {
  bool equal = false;
  std::vector<double> omega;

  void add(CLI::App* app) {
    app->add_flag("--equal-rabi", equal, "use Omega12 = Omega23 = Omega13 = 1");
    app->add_option("--omega", omega, "Omega12,Omega23,Omega13")->delimiter(',')->expected(3);
  }

  holonomy::Magnitudes resolve(const holonomy::Magnitudes& fallback) const {
    if (equal) return {1.0, 1.0, 1.0};
    if (omega.size() == 3) return {omega[0], omega[1], omega[2]};
    return fallback;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

art::RunConfig base_config(const Common& common) {
  art::RunConfig c = common.config_path.empty() ? art::parse_config("") : art::load_config(common.config_path);
  if (!common.format.empty()) c.output_format = art::parse_format(common.format);
  return c;
}

void select_kernel(const std::string& name) {
  if (name == "auto") return;
  if (name == "scalar") kernels::set_active_isa(kernels::Isa::scalar);
  else if (name == "avx2") kernels::set_active_isa(kernels::Isa::avx2);
  else if (name == "neon") kernels::set_active_isa(kernels::Isa::neon);
}

std::string lobe_kind(propagate::LobeKind k) { return k == propagate::LobeKind::max ? "max" : "min"; }

// -- render -------------------------------------------------------------------------

struct RenderOutput {
  art::RunManifest manifest;
  std::vector<propagate::Lobe> lobes;
  double visibility = 0.0;
};

RenderOutput render_to(const art::RunConfig& config, const fs::path& dir, unsigned jobs, bool normalize,
                       bool fields, const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  auto scene = config.scene();
  scene.jobs = jobs;
  const auto r = propagate::render(scene);
  RenderOutput out;
  out.manifest.command = command;
  out.manifest.config = art::to_json(config);
  out.manifest.timings_s["render"] = seconds_since(t0);

  const auto t1 = std::chrono::steady_clock::now();
  const double peak = normalize ? r.input_peak_intensity : 1.0;
  const auto fmt_ = config.output_format;
  const auto ext = art::format_extension(fmt_);
  auto emit_map = [&](const propagate::RealMap& map, const std::string& name) {
    const auto path = dir / (name + ext);
    out.manifest.add_output(dir, path, art::write_map(map, path, fmt_));
  };
  emit_map(propagate::normalized(r.intensity_in, peak), "intensity_in");
  emit_map(propagate::normalized(r.intensity_out, peak), "intensity_out");
  emit_map({r.phase_in.grid, r.phase_in.values}, "phase_in");
  emit_map({r.phase_out.grid, r.phase_out.values}, "phase_out");
  if (fields) {
    const auto ffmt = fmt_ == art::Format::pgm16 ? art::Format::bin : fmt_;
    const auto fext = art::format_extension(ffmt);
    auto emit_field = [&](const beamlab::ComplexField& f, const std::string& name) {
      const auto path = dir / (name + fext);
      out.manifest.add_output(dir, path, art::write_field(f, path, ffmt));
    };
    emit_field(r.probe_in, "probe_in");
    emit_field(r.pump, "pump");
    emit_field(r.probe_out, "probe_out");
  }

  const double radius = config.effective_ring_radius();
  out.lobes = propagate::lobe_angles(r.intensity_out, radius, config.ring);
  out.visibility = propagate::visibility(r.intensity_out, radius, config.ring);
  art::Report report{{"ring_radius", fmt::format("{}", radius)},
                     {"n_theta", std::to_string(config.ring.n_theta)},
                     {"visibility", fmt::format("{}", out.visibility)},
                     {"lobe_count", std::to_string(out.lobes.size())}};
  for (std::size_t k = 0; k < out.lobes.size(); ++k)
    report.emplace_back(fmt::format("lobe_{}", k),
                        fmt::format("{} {} {}", lobe_kind(out.lobes[k].kind), out.lobes[k].angle, out.lobes[k].value));
  const auto report_path = dir / "lobes.txt";
  out.manifest.add_output(dir, report_path, art::write_report(report, report_path));
  out.manifest.results = art::report_json(report);
  out.manifest.timings_s["write"] = seconds_since(t1);
  art::write_manifest(out.manifest, dir / "manifest.json");
  return out;
}

int cmd_render(const Common& common, const SceneFlags& flags, bool normalize, bool fields) {
  auto config = base_config(common);
  flags.apply(config);
  config.finalize();
  const fs::path dir = common.out_dir;
  const auto out = render_to(config, dir, common.jobs, normalize, fields, "render");
  std::printf("ring radius %.6g, visibility %.6f\n", config.effective_ring_radius(), out.visibility);
  if (out.lobes.empty()) std::printf("no extrema on the ring\n");
  for (const auto& l : out.lobes)
    std::printf("%s lobe at theta = %.6f rad (%.3f deg)\n", lobe_kind(l.kind).c_str(), l.angle,
                l.angle * 180.0 / std::numbers::pi);
  std::printf("outputs in %s\n", dir.string().c_str());
  return exit_ok;
}

// -- spectrum / torus -----------------------------------------------------------------

int cmd_spectrum(const Common& common, const MagnitudeFlags& mags, int resolution) {
  auto config = base_config(common);
  const auto m = mags.resolve({config.coupling.omega12, config.coupling.omega23, config.coupling.omega13});
  const auto t0 = std::chrono::steady_clock::now();
  const auto surface = holonomy::spectrum_surface(m, resolution, common.jobs);
  const fs::path dir = common.out_dir;
  art::RunManifest manifest;
  manifest.command = "spectrum";
  manifest.config = art::to_json(config);
  manifest.config["spectrum"]["resolution"] = resolution;
  manifest.config["spectrum"]["magnitudes"] = {m.omega12, m.omega23, m.omega13};
  for (const auto& [path, sum] : art::write_surface(surface, dir)) manifest.add_output(dir, path, sum);
  manifest.timings_s["spectrum"] = seconds_since(t0);
  manifest.results = {{"zero_set_points", surface.middle_zero_set.size()},
                      {"degeneracy_points", surface.degeneracy_points.size()}};
  art::write_manifest(manifest, dir / "manifest.json");
  std::printf("magnitudes %.6g %.6g %.6g, resolution %d\n", m.omega12, m.omega23, m.omega13, resolution);
  std::printf("middle-sheet zero crossings: %zu\n", surface.middle_zero_set.size());
  std::printf("degeneracy points: %zu\n", surface.degeneracy_points.size());
  for (const auto& p : surface.degeneracy_points) std::printf("  u=%.6f v=%.6f\n", p.u, p.v);
  return exit_ok;
}

int cmd_torus(const Common& common, int resolution) {
  const auto manifold = holonomy::dark_manifold(resolution);
  const fs::path dir = common.out_dir;
  art::RunManifest manifest;
  manifest.command = "torus";
  manifest.config = {{"resolution", resolution}};
  nlohmann::json loops = nlohmann::json::array();
  for (std::size_t k = 0; k < manifold.loops.size(); ++k) {
    const auto& loop = manifold.loops[k];
    propagate::RealMap dummy;
    std::string bytes = "u,v\n";
    for (const auto& p : loop.points) bytes += fmt::format("{},{}\n", p.u, p.v);
    const auto path = dir / fmt::format("dark_loop_{}.csv", k);
    fs::create_directories(dir);
    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f || std::fwrite(bytes.data(), 1, bytes.size(), f) != bytes.size())
      throw IoError(path.string(), "write failed");
    std::fclose(f);
    manifest.add_output(dir, path, art::sha256_bytes(bytes));
    loops.push_back({{"offset", loop.offset}, {"winding", {loop.winding_u, loop.winding_v}}});
    std::printf("loop %zu: u - v = %.6f, %zu points, winding (%d,%d)\n", k, loop.offset, loop.points.size(),
                loop.winding_u, loop.winding_v);
  }
  manifest.results = {{"loops", loops}, {"min_separation", manifold.min_separation}, {"disjoint", manifold.disjoint}};
  art::write_manifest(manifest, dir / "manifest.json");
  std::printf("minimum separation in u - v: %.6f, disjoint: %s\n", manifold.min_separation,
              manifold.disjoint ? "yes" : "no");
  return manifold.disjoint ? exit_ok : exit_validation;
}

// -- berry / protocol -----------------------------------------------------------------------

struct LoopFlags {
  std::optional<double> time;
  std::optional<long> steps;
  std::optional<int> samples;
  std::optional<std::string> ramp;

  void add(CLI::App* app) {
    app->add_option("--time", time, "loop duration in 1/gamma13")->check(CLI::PositiveNumber);
    app->add_option("--steps", steps, "integrator steps")->check(CLI::Range(1L, 1000000000L));
    app->add_option("--samples", samples, "Wilson-loop samples")->check(CLI::Range(100, 100000000));
    app->add_option("--ramp", ramp, "linear or sin_squared")->check(CLI::IsMember({"linear", "sin_squared"}));
  }

  void apply(art::RunConfig& c) const {
    if (time) c.adiabatic.total_time = *time;
    if (steps) c.adiabatic.n_steps = *steps;
    if (samples) c.adiabatic.wilson_samples = *samples;
    if (ramp) c.adiabatic.ramp = *ramp == "linear" ? holonomy::Ramp::linear : holonomy::Ramp::sin_squared;
  }
};

int cmd_berry(const Common& common, const MagnitudeFlags& mags, const LoopFlags& loop) {
  auto config = base_config(common);
  config.berry = mags.resolve(config.berry);
  loop.apply(config);
  config.finalize();
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = holonomy::adiabatic_evolve(config.berry, config.adiabatic);
  const auto report = art::to_report(result);
  const fs::path dir = common.out_dir;
  art::RunManifest manifest;
  manifest.command = "berry";
  manifest.config = art::to_json(config);
  manifest.timings_s["berry"] = seconds_since(t0);
  const auto path = dir / "berry.txt";
  manifest.add_output(dir, path, art::write_report(report, path));
  manifest.results = art::report_json(report);
  art::write_manifest(manifest, dir / "manifest.json");
  std::fputs(art::format_report(report).c_str(), stdout);
  if (result.diabatic) std::printf("warning: non-adiabatic loop (fidelity below 0.99)\n");
  return exit_ok;
}

int cmd_protocol(const Common& common, const SceneFlags& flags, const MagnitudeFlags& mags, const LoopFlags& loop,
                 const std::optional<std::string>& c_text) {
  auto config = base_config(common);
  flags.apply(config);
  config.berry = mags.resolve(config.berry);
  loop.apply(config);
  if (c_text) config.protocol_c = art::parse_angle(*c_text);
  config.finalize();

  protocol::ProtocolOptions options;
  options.scene = config.scene();
  options.scene.jobs = common.jobs;
  options.loop_magnitudes = config.berry;
  options.adiabatic = config.adiabatic;
  options.ring = config.ring;
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = protocol::run_protocol(config.protocol_c, options);
  const auto report = art::to_report(result);
  const fs::path dir = common.out_dir;
  art::RunManifest manifest;
  manifest.command = "protocol";
  manifest.config = art::to_json(config);
  manifest.timings_s["protocol"] = seconds_since(t0);
  const auto path = dir / "protocol.txt";
  manifest.add_output(dir, path, art::write_report(report, path));
  manifest.results = art::report_json(report);
  art::write_manifest(manifest, dir / "manifest.json");
  std::fputs(art::format_report(report).c_str(), stdout);
  return result.completed ? exit_ok : exit_validation;
}

// -- sweep -------------------------------------------------------------------------------

int cmd_sweep(const Common& common, const SceneFlags& flags, const std::vector<double>& ods,
              const std::vector<std::string>& phis, const std::vector<double>& omega12s) {
  auto base = base_config(common);
  flags.apply(base);
  base.finalize();

  struct Point {
    art::RunConfig config;
    fs::path dir;
  };
  std::vector<Point> points;
  const std::vector<double> od_axis = ods.empty() ? std::vector<double>{base.propagation.optical_depth()} : ods;
  std::vector<double> phi_axis;
  for (const auto& p : phis) phi_axis.push_back(art::parse_angle(p));
  if (phi_axis.empty()) phi_axis.push_back(base.coupling.phi12);
  const std::vector<double> w_axis = omega12s.empty() ? std::vector<double>{base.coupling.omega12} : omega12s;
  for (double od : od_axis)
    for (double phi : phi_axis)
      for (double w : w_axis) {
        art::RunConfig c = base;
        c.propagation.alpha = od / c.propagation.length;
        c.coupling.phi12 = phi;
        c.coupling.omega12 = w;
        c.finalize();
        points.push_back({c, fs::path(common.out_dir) / fmt::format("point_{:03d}", points.size())});
      }

  // One point per worker; each point renders single-threaded into its own directory.
  const unsigned workers = std::min<unsigned>(resolve_jobs(common.jobs), static_cast<unsigned>(points.size()));
  std::atomic<std::size_t> next{0};
  std::mutex print;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      try {
        const auto out = render_to(points[k].config, points[k].dir, 1, true, false, "sweep");
        std::lock_guard lock(print);
        std::printf("%s  od=%g phi12=%.6f omega12=%g  visibility=%.6f  extrema=%zu\n",
                    points[k].dir.string().c_str(), points[k].config.propagation.optical_depth(),
                    points[k].config.coupling.phi12, points[k].config.coupling.omega12, out.visibility,
                    out.lobes.size());
      } catch (...) {
        std::lock_guard lock(print);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
  return exit_ok;
}

// -- validate ------------------------------------------------------------------------------

int cmd_validate(const Common& common, const std::vector<int>& only, bool verbose) {
  const auto ids = only.empty() ? acceptance::criterion_ids() : only;
  int failed = 0;
  for (int id : ids) {
    const auto r = acceptance::run_criterion(id, common.jobs);
    std::fputs(acceptance::format_result(r, verbose).c_str(), stdout);
    std::fflush(stdout);
    if (!r.passed) ++failed;
  }
  std::printf("%zu criteria, %d failed\n", ids.size(), failed);
  return failed == 0 ? exit_ok : exit_validation;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop-phase imprinting on structured light and Berry-phase readout in a closed-loop three-level medium"};
  app.footer(reproductions);
  app.require_subcommand(1);

  Common common;
  app.add_option("--config", common.config_path, "YAML run configuration");
  app.add_option("--out", common.out_dir, "output directory")->capture_default_str();
  app.add_option("--jobs", common.jobs, "worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--kernel", common.kernel, "pixel kernel variant")
      ->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}))
      ->capture_default_str();
  app.add_option("--format", common.format, "map format: csv, pgm16 or bin")
      ->check(CLI::IsMember({"csv", "pgm16", "bin"}));

  SceneFlags render_flags;
  bool normalize = true, fields = false;
  auto* render = app.add_subcommand("render", "render input/output intensity and phase maps with a lobe report");
  render_flags.add(render);
  render->add_flag("!--raw", normalize, "write intensities unnormalized (default: divided by the input peak)");
  render->add_flag("--fields", fields, "also write the complex probe, pump and output fields");

  MagnitudeFlags spectrum_mags;
  int spectrum_resolution = 64;
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalue sheets over the (phi12+phi23, phi13) torus");
  spectrum_mags.add(spectrum);
  spectrum->add_option("--resolution", spectrum_resolution, "grid points per torus axis")
      ->check(CLI::Range(16, 4096))
      ->capture_default_str();

  int torus_resolution = 100;
  auto* torus = app.add_subcommand("torus", "dark-state loops on the phase torus");
  torus->add_option("--resolution", torus_resolution, "points per loop")->check(CLI::Range(2, 1000000))
      ->capture_default_str();

  MagnitudeFlags berry_mags;
  LoopFlags berry_loop;
  auto* berry = app.add_subcommand("berry", "Berry phase: closed form, Wilson loop and adiabatic evolution");
  berry_mags.add(berry);
  berry_loop.add(berry);

  SceneFlags protocol_flags;
  MagnitudeFlags protocol_mags;
  LoopFlags protocol_loop;
  std::optional<std::string> protocol_c;
  auto* proto = app.add_subcommand("protocol", "three-stage Berry-phase measurement");
  protocol_flags.add(proto);
  protocol_mags.add(proto);
  protocol_loop.add(proto);
  proto->add_option("--c", protocol_c, "unknown pump phase offset (radians or deg)");

  SceneFlags sweep_flags;
  std::vector<double> sweep_od, sweep_omega12;
  std::vector<std::string> sweep_phi12;
  auto* sweep = app.add_subcommand("sweep", "render a grid of (OD, phi12, Omega12) points, one directory each");
  sweep_flags.add(sweep);
  sweep->add_option("--od-list", sweep_od, "comma-separated optical depths")->delimiter(',');
  sweep->add_option("--phi12-list", sweep_phi12, "comma-separated 1-2 phases")->delimiter(',');
  sweep->add_option("--omega12-list", sweep_omega12, "comma-separated 1-2 Rabi frequencies")->delimiter(',');
  // `--od 0.5,1,5` is accepted as a list in sweep mode.
  sweep->get_option("--od")->description("optical depth (single value; use --od-list for several)");

  std::vector<int> validate_ids;
  bool validate_quiet = false;
  auto* validate = app.add_subcommand("validate", "run the acceptance suite");
  validate->add_option("--criterion", validate_ids, "run only these criteria")->check(CLI::Range(1, 12));
  validate->add_flag("--quiet", validate_quiet, "one line per criterion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    select_kernel(common.kernel);
    if (*render) return cmd_render(common, render_flags, normalize, fields);
    if (*spectrum) return cmd_spectrum(common, spectrum_mags, spectrum_resolution);
    if (*torus) return cmd_torus(common, torus_resolution);
    if (*berry) return cmd_berry(common, berry_mags, berry_loop);
    if (*proto) return cmd_protocol(common, protocol_flags, protocol_mags, protocol_loop, protocol_c);
    if (*sweep) return cmd_sweep(common, sweep_flags, sweep_od, sweep_phi12, sweep_omega12);
    if (*validate) return cmd_validate(common, validate_ids, !validate_quiet);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_validation;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_io;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_io;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return exit_usage;
}
