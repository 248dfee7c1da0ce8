#include "loopphase/artifacts.hpp"

#include "loopphase/errors.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace loopphase::artifacts {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double pi = std::numbers::pi;

// -- numbers ----------------------------------------------------------------

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto [end, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && end == t.data() + t.size();
}

// -- files ------------------------------------------------------------------

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(path.string(), "read failed");
  return ss.str();
}

void write_bytes(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string(), "cannot create directory: " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError(path.string(), "write failed");
}

// -- little-endian encoding --------------------------------------------------

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

struct Cursor {
  const std::string& bytes;
  std::size_t pos = 0;
  std::string path;

  std::uint64_t u64() {
    if (pos + 8 > bytes.size()) throw IoError(path, "truncated binary file");
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + b])) << (8 * b);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

std::string bin_header(const char* magic, const beamlab::GridSpec& g) {
  std::string out(magic, 8);
  put_u64(out, g.nx);
  put_u64(out, g.ny);
  put_f64(out, g.half_extent);
  put_f64(out, g.center_x);
  put_f64(out, g.center_y);
  return out;
}

beamlab::GridSpec read_bin_header(Cursor& c, const char* magic) {
  if (c.bytes.size() < 48 || c.bytes.compare(0, 8, magic) != 0)
    throw IoError(c.path, std::string("not a ") + magic + " file");
  c.pos = 8;
  beamlab::GridSpec g;
  g.nx = c.u64();
  g.ny = c.u64();
  g.half_extent = c.f64();
  g.center_x = c.f64();
  g.center_y = c.f64();
  try {
    g.validate();
  } catch (const ValidationError& e) {
    throw IoError(c.path, std::string("bad header: ") + e.what());
  }
  return g;
}

// -- CSV ----------------------------------------------------------------------

std::vector<std::vector<double>> read_csv(const fs::path& path, const std::string& header,
                                          std::size_t columns) {
  std::istringstream in(read_bytes(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != header)
    throw IoError(path.string(), "expected header '" + header + "'");
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      double v;
      if (!parse_double(std::string_view(line).substr(start, comma - start), v))
        throw IoError(path.string(), "line " + std::to_string(line_no) + ": bad number");
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != columns)
      throw IoError(path.string(), "line " + std::to_string(line_no) + ": expected " +
                                       std::to_string(columns) + " columns");
    rows.push_back(std::move(row));
  }
  return rows;
}

// Recovers the grid from pixel-centre coordinates written in storage order.
beamlab::GridSpec grid_from_rows(const std::vector<std::vector<double>>& rows, const fs::path& path) {
  if (rows.size() < 4) throw IoError(path.string(), "too few rows for a grid");
  std::size_t nx = 1;
  while (nx < rows.size() && rows[nx][1] == rows[0][1]) ++nx;
  if (nx < 2 || rows.size() % nx != 0) throw IoError(path.string(), "rows do not form a grid");
  const std::size_t ny = rows.size() / nx;
  beamlab::GridSpec g;
  g.nx = nx;
  g.ny = ny;
  const double x0 = rows[0][0], x1 = rows[nx - 1][0];
  const double y0 = rows[0][1], y1 = rows[rows.size() - 1][1];
  g.center_x = 0.5 * (x0 + x1);
  g.center_y = 0.5 * (y0 + y1);
  g.half_extent = 0.5 * (x1 - x0) * static_cast<double>(nx) / static_cast<double>(nx - 1);
  g.validate();
  return g;
}

// -- PGM ------------------------------------------------------------------------

std::map<std::string, std::string> read_meta(const fs::path& path) {
  std::istringstream in(read_bytes(path));
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

double meta_number(const std::map<std::string, std::string>& meta, const std::string& key,
                   const fs::path& path) {
  const auto it = meta.find(key);
  double v;
  if (it == meta.end() || !parse_double(it->second, v))
    throw IoError(path.string(), "missing or bad '" + key + "'");
  return v;
}

fs::path sidecar(const fs::path& path) { return fs::path(path.string() + ".meta.txt"); }

// -- YAML -----------------------------------------------------------------------

std::string where(const YAML::Node& n) {
  const auto mark = n.Mark();
  if (mark.line < 0) return "";
  return " (line " + std::to_string(mark.line + 1) + ")";
}

[[noreturn]] void fail(const std::string& field, const std::string& what, const YAML::Node& n) {
  throw ValidationError(field, what + where(n));
}

void check_keys(const YAML::Node& node, const std::string& path, const std::set<std::string>& allowed) {
  if (!node.IsMap()) fail(path.empty() ? "config" : path, "expected a mapping", node);
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key))
      fail(path.empty() ? key : path + "." + key, "unknown key '" + key + "'", kv.first);
  }
}

double as_number(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(field, "expected a number", n);
  double v;
  if (!parse_double(n.Scalar(), v) || !std::isfinite(v)) fail(field, "expected a finite number, got '" + n.Scalar() + "'", n);
  return v;
}

long long as_integer(const YAML::Node& n, const std::string& field) {
  const double v = as_number(n, field);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) fail(field, "expected an integer", n);
  return static_cast<long long>(v);
}

double as_angle(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(field, "expected an angle", n);
  try {
    return parse_angle(n.Scalar());
  } catch (const ValidationError& e) {
    fail(field, e.reason(), n);
  }
}

template <class Fn>
void with(const YAML::Node& parent, const std::string& key, Fn&& fn) {
  if (const YAML::Node n = parent[key]) fn(n);
}

void read_mode(const YAML::Node& node, const std::string& path, beamlab::LGModeSpec& mode) {
  check_keys(node, path, {"l", "m", "w0", "wavelength"});
  with(node, "l", [&](const YAML::Node& n) { mode.l = static_cast<int>(as_integer(n, path + ".l")); });
  with(node, "m", [&](const YAML::Node& n) { mode.m = static_cast<int>(as_integer(n, path + ".m")); });
  with(node, "w0", [&](const YAML::Node& n) { mode.w0 = as_number(n, path + ".w0"); });
  with(node, "wavelength", [&](const YAML::Node& n) { mode.wavelength = as_number(n, path + ".wavelength"); });
}

template <class Fn>
void prefixed(const std::string& prefix, Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    const std::string& f = e.field();
    if (f.rfind(prefix, 0) == 0) throw;
    throw ValidationError(prefix + f, e.reason());
  }
}

} // namespace

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::csv;
  if (name == "pgm16" || name == "pgm") return Format::pgm16;
  if (name == "bin") return Format::bin;
  throw ValidationError("output.format", "unknown format '" + name + "' (csv, pgm16, bin)");
}

std::string format_name(Format f) {
  switch (f) {
  case Format::csv: return "csv";
  case Format::pgm16: return "pgm16";
  case Format::bin: return "bin";
  }
  return "csv";
}

std::string format_extension(Format f) {
  switch (f) {
  case Format::csv: return ".csv";
  case Format::pgm16: return ".pgm";
  case Format::bin: return ".bin";
  }
  return ".csv";
}

double parse_angle(const std::string& text) {
  std::string t = trim(text);
  bool degrees = false;
  if (t.size() > 3 && t.compare(t.size() - 3, 3, "deg") == 0) {
    degrees = true;
    t = trim(t.substr(0, t.size() - 3));
  }
  double v;
  if (!parse_double(t, v) || !std::isfinite(v))
    throw ValidationError("angle", "cannot parse '" + text + "' (radians or '<number>deg')");
  return degrees ? v * pi / 180.0 : v;
}

void RunConfig::finalize() {
  if (!gamma23_set) relaxation.gamma23 = (relaxation.gamma13 + relaxation.gamma12) / 2.0;
  if (!half_extent_set) grid.half_extent = 3.0 * probe.w0;
  validate();
}

void RunConfig::validate() const {
  prefixed("probe.", [&] { probe.validate(); });
  prefixed("pump.", [&] { pump.validate(); });
  coupling.validate();
  relaxation.validate();
  propagation.validate();
  grid.validate();
  if (!std::isfinite(plane_z)) throw ValidationError("grid.plane_z", "must be finite");
  if (ring.n_theta < 8) throw ValidationError("analysis.n_theta", "must be at least 8");
  if (!(ring.noise_floor >= 0.0)) throw ValidationError("analysis.noise_floor", "must be >= 0");
  if (!(ring_radius >= 0.0)) throw ValidationError("analysis.ring_radius", "must be >= 0");
  prefixed("berry.", [&] { berry.validate(); });
  if (!(adiabatic.total_time > 0.0)) throw ValidationError("berry.total_time", "must be positive");
  if (adiabatic.n_steps < 1) throw ValidationError("berry.n_steps", "must be >= 1");
  if (adiabatic.wilson_samples < 100) throw ValidationError("berry.samples", "must be at least 100");
  if (spectrum_resolution < 16) throw ValidationError("spectrum.resolution", "must be at least 16");
}

propagate::Scene RunConfig::scene() const {
  propagate::Scene s;
  s.probe_mode = probe;
  s.pump_mode = pump;
  s.probe_rabi = coupling.omega13;
  s.pump_rabi = coupling.omega23;
  s.coupling = coupling;
  s.relax = relaxation;
  s.params = propagation;
  s.grid = grid;
  s.plane_z = plane_z;
  return s;
}

double RunConfig::effective_ring_radius() const {
  return ring_radius > 0.0 ? ring_radius : scene().ring_radius();
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError("config", origin + ": parse error at line " + std::to_string(e.mark.line + 1) +
                                        ": " + e.msg);
  }
  RunConfig c;
  if (!root || root.IsNull()) {
    c.finalize();
    return c;
  }
  check_keys(root, "", {"probe", "pump", "coupling", "relaxation", "propagation", "grid", "analysis",
                        "berry", "protocol", "spectrum", "output", "seed"});

  with(root, "probe", [&](const YAML::Node& n) { read_mode(n, "probe", c.probe); });
  with(root, "pump", [&](const YAML::Node& n) { read_mode(n, "pump", c.pump); });
  with(root, "coupling", [&](const YAML::Node& node) {
    check_keys(node, "coupling", {"omega12", "omega23", "omega13", "phi12", "phi23", "phi13"});
    with(node, "omega12", [&](const YAML::Node& n) { c.coupling.omega12 = as_number(n, "coupling.omega12"); });
    with(node, "omega23", [&](const YAML::Node& n) { c.coupling.omega23 = as_number(n, "coupling.omega23"); });
    with(node, "omega13", [&](const YAML::Node& n) { c.coupling.omega13 = as_number(n, "coupling.omega13"); });
    with(node, "phi12", [&](const YAML::Node& n) { c.coupling.phi12 = as_angle(n, "coupling.phi12"); });
    with(node, "phi23", [&](const YAML::Node& n) { c.coupling.phi23 = as_angle(n, "coupling.phi23"); });
    with(node, "phi13", [&](const YAML::Node& n) { c.coupling.phi13 = as_angle(n, "coupling.phi13"); });
  });
  with(root, "relaxation", [&](const YAML::Node& node) {
    check_keys(node, "relaxation", {"Gamma", "gamma12", "gamma13", "gamma23"});
    with(node, "Gamma", [&](const YAML::Node& n) { c.relaxation.Gamma = as_number(n, "relaxation.Gamma"); });
    with(node, "gamma12", [&](const YAML::Node& n) { c.relaxation.gamma12 = as_number(n, "relaxation.gamma12"); });
    with(node, "gamma13", [&](const YAML::Node& n) { c.relaxation.gamma13 = as_number(n, "relaxation.gamma13"); });
    with(node, "gamma23", [&](const YAML::Node& n) {
      c.relaxation.gamma23 = as_number(n, "relaxation.gamma23");
      c.gamma23_set = true;
    });
  });
  with(root, "propagation", [&](const YAML::Node& node) {
    check_keys(node, "propagation", {"od", "length", "n_z"});
    double od = c.propagation.optical_depth();
    with(node, "od", [&](const YAML::Node& n) { od = as_number(n, "propagation.od"); });
    with(node, "length", [&](const YAML::Node& n) { c.propagation.length = as_number(n, "propagation.length"); });
    with(node, "n_z", [&](const YAML::Node& n) {
      c.propagation.n_z = static_cast<int>(as_integer(n, "propagation.n_z"));
    });
    if (!(c.propagation.length > 0.0)) fail("propagation.length", "must be positive", node["length"]);
    if (!(od >= 0.0)) fail("propagation.od", "must be >= 0", node["od"]);
    c.propagation.alpha = od / c.propagation.length;
  });
  with(root, "grid", [&](const YAML::Node& node) {
    check_keys(node, "grid", {"n", "nx", "ny", "half_extent", "center_x", "center_y", "plane_z"});
    auto count = [&](const YAML::Node& n, const std::string& f) {
      const auto v = as_integer(n, f);
      if (v < 2) fail(f, "need at least 2 pixels", n);
      return static_cast<std::size_t>(v);
    };
    with(node, "n", [&](const YAML::Node& n) { c.grid.nx = c.grid.ny = count(n, "grid.n"); });
    with(node, "nx", [&](const YAML::Node& n) { c.grid.nx = count(n, "grid.nx"); });
    with(node, "ny", [&](const YAML::Node& n) { c.grid.ny = count(n, "grid.ny"); });
    with(node, "half_extent", [&](const YAML::Node& n) {
      c.grid.half_extent = as_number(n, "grid.half_extent");
      c.half_extent_set = true;
    });
    with(node, "center_x", [&](const YAML::Node& n) { c.grid.center_x = as_number(n, "grid.center_x"); });
    with(node, "center_y", [&](const YAML::Node& n) { c.grid.center_y = as_number(n, "grid.center_y"); });
    with(node, "plane_z", [&](const YAML::Node& n) { c.plane_z = as_number(n, "grid.plane_z"); });
  });
  with(root, "analysis", [&](const YAML::Node& node) {
    check_keys(node, "analysis", {"n_theta", "noise_floor", "ring_radius"});
    with(node, "n_theta", [&](const YAML::Node& n) {
      const auto v = as_integer(n, "analysis.n_theta");
      if (v < 8) fail("analysis.n_theta", "must be at least 8", n);
      c.ring.n_theta = static_cast<std::size_t>(v);
    });
    with(node, "noise_floor", [&](const YAML::Node& n) { c.ring.noise_floor = as_number(n, "analysis.noise_floor"); });
    with(node, "ring_radius", [&](const YAML::Node& n) { c.ring_radius = as_number(n, "analysis.ring_radius"); });
  });
  with(root, "berry", [&](const YAML::Node& node) {
    check_keys(node, "berry", {"omega12", "omega23", "omega13", "total_time", "n_steps", "samples", "ramp"});
    with(node, "omega12", [&](const YAML::Node& n) { c.berry.omega12 = as_number(n, "berry.omega12"); });
    with(node, "omega23", [&](const YAML::Node& n) { c.berry.omega23 = as_number(n, "berry.omega23"); });
    with(node, "omega13", [&](const YAML::Node& n) { c.berry.omega13 = as_number(n, "berry.omega13"); });
    with(node, "total_time", [&](const YAML::Node& n) { c.adiabatic.total_time = as_number(n, "berry.total_time"); });
    with(node, "n_steps", [&](const YAML::Node& n) { c.adiabatic.n_steps = static_cast<long>(as_integer(n, "berry.n_steps")); });
    with(node, "samples", [&](const YAML::Node& n) {
      c.adiabatic.wilson_samples = static_cast<int>(as_integer(n, "berry.samples"));
    });
    with(node, "ramp", [&](const YAML::Node& n) {
      const auto v = n.as<std::string>();
      if (v == "linear") c.adiabatic.ramp = holonomy::Ramp::linear;
      else if (v == "sin_squared") c.adiabatic.ramp = holonomy::Ramp::sin_squared;
      else fail("berry.ramp", "expected 'linear' or 'sin_squared'", n);
    });
  });
  with(root, "protocol", [&](const YAML::Node& node) {
    check_keys(node, "protocol", {"c"});
    with(node, "c", [&](const YAML::Node& n) { c.protocol_c = as_angle(n, "protocol.c"); });
  });
  with(root, "spectrum", [&](const YAML::Node& node) {
    check_keys(node, "spectrum", {"resolution"});
    with(node, "resolution", [&](const YAML::Node& n) {
      c.spectrum_resolution = static_cast<int>(as_integer(n, "spectrum.resolution"));
    });
  });
  with(root, "output", [&](const YAML::Node& node) {
    check_keys(node, "output", {"format"});
    with(node, "format", [&](const YAML::Node& n) {
      try {
        c.output_format = parse_format(n.as<std::string>());
      } catch (const ValidationError& e) {
        fail(e.field(), e.reason(), n);
      }
    });
  });
  with(root, "seed", [&](const YAML::Node& n) {
    const auto v = as_integer(n, "seed");
    if (v < 0) fail("seed", "must be >= 0", n);
    c.seed = static_cast<unsigned long long>(v);
  });

  c.finalize();
  return c;
}

RunConfig load_config(const fs::path& path) {
  return parse_config(read_bytes(path), path.string());
}

json to_json(const RunConfig& c) {
  auto mode = [](const beamlab::LGModeSpec& m) {
    return json{{"l", m.l}, {"m", m.m}, {"w0", m.w0}, {"wavelength", m.wavelength}};
  };
  return json{
      {"probe", mode(c.probe)},
      {"pump", mode(c.pump)},
      {"coupling",
       {{"omega12", c.coupling.omega12}, {"omega23", c.coupling.omega23}, {"omega13", c.coupling.omega13},
        {"phi12", c.coupling.phi12}, {"phi23", c.coupling.phi23}, {"phi13", c.coupling.phi13}}},
      {"relaxation",
       {{"Gamma", c.relaxation.Gamma}, {"gamma12", c.relaxation.gamma12},
        {"gamma13", c.relaxation.gamma13}, {"gamma23", c.relaxation.gamma23}}},
      {"propagation",
       {{"od", c.propagation.optical_depth()}, {"length", c.propagation.length}, {"n_z", c.propagation.n_z}}},
      {"grid",
       {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"half_extent", c.grid.half_extent},
        {"center_x", c.grid.center_x}, {"center_y", c.grid.center_y}, {"plane_z", c.plane_z}}},
      {"analysis",
       {{"n_theta", c.ring.n_theta}, {"noise_floor", c.ring.noise_floor}, {"ring_radius", c.effective_ring_radius()}}},
      {"berry",
       {{"omega12", c.berry.omega12}, {"omega23", c.berry.omega23}, {"omega13", c.berry.omega13},
        {"total_time", c.adiabatic.total_time}, {"n_steps", c.adiabatic.n_steps},
        {"samples", c.adiabatic.wilson_samples},
        {"ramp", c.adiabatic.ramp == holonomy::Ramp::linear ? "linear" : "sin_squared"}}},
      {"protocol", {{"c", c.protocol_c}}},
      {"spectrum", {{"resolution", c.spectrum_resolution}}},
      {"output", {{"format", format_name(c.output_format)}}},
      {"seed", c.seed},
  };
}

std::string sha256_bytes(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("sha256: digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[digest[k] >> 4]);
    out.push_back(hex[digest[k] & 0xF]);
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_bytes(read_bytes(path)); }

std::string write_map(const propagate::RealMap& map, const fs::path& path, Format format) {
  map.grid.validate();
  if (map.values.size() != map.grid.size()) throw ValidationError("map", "size mismatch");
  const auto& g = map.grid;
  std::string bytes;
  switch (format) {
  case Format::csv: {
    bytes = "x,y,value\n";
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i)
        bytes += num(g.x(i)) + ',' + num(g.y(j)) + ',' + num(map.values[g.index(i, j)]) + '\n';
    break;
  }
  case Format::bin: {
    bytes = bin_header("LPRMAP01", g);
    bytes.reserve(bytes.size() + 8 * map.values.size());
    for (double v : map.values) put_f64(bytes, v);
    break;
  }
  case Format::pgm16: {
    for (double v : map.values)
      if (!std::isfinite(v)) throw ValidationError("map", "pgm16 needs finite values");
    const auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
    const double lo = *lo_it, hi = *hi_it;
    bytes = "P5\n" + std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n65535\n";
    bytes.reserve(bytes.size() + 2 * map.values.size());
    for (double v : map.values) {
      const auto s = hi > lo ? static_cast<std::uint16_t>(std::lround((v - lo) / (hi - lo) * 65535.0)) : 0;
      bytes.push_back(static_cast<char>(s >> 8));
      bytes.push_back(static_cast<char>(s & 0xFF));
    }
    std::string meta = "min=" + num(lo) + "\nmax=" + num(hi) + "\nnx=" + std::to_string(g.nx) +
                       "\nny=" + std::to_string(g.ny) + "\nhalf_extent=" + num(g.half_extent) +
                       "\ncenter_x=" + num(g.center_x) + "\ncenter_y=" + num(g.center_y) +
                       "\nscaling=linear\nrow_order=y_ascending\ndegenerate_rule=min_equals_max_maps_to_0\n";
    write_bytes(sidecar(path), meta);
    break;
  }
  }
  write_bytes(path, bytes);
  return sha256_bytes(bytes);
}

std::string write_field(const beamlab::ComplexField& field, const fs::path& path, Format format) {
  field.grid.validate();
  if (field.values.size() != field.grid.size()) throw ValidationError("field", "size mismatch");
  const auto& g = field.grid;
  std::string bytes;
  switch (format) {
  case Format::csv:
    bytes = "x,y,re,im\n";
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i) {
        const auto v = field.values[g.index(i, j)];
        bytes += num(g.x(i)) + ',' + num(g.y(j)) + ',' + num(v.real()) + ',' + num(v.imag()) + '\n';
      }
    break;
  case Format::bin:
    bytes = bin_header("LPCFLD01", g);
    for (const auto& v : field.values) {
      put_f64(bytes, v.real());
      put_f64(bytes, v.imag());
    }
    break;
  case Format::pgm16:
    throw ValidationError("format", "pgm16 stores real maps only; write an intensity or phase map");
  }
  write_bytes(path, bytes);
  return sha256_bytes(bytes);
}

Pgm16Image read_pgm16(const fs::path& path) {
  const std::string bytes = read_bytes(path);
  std::istringstream in(bytes);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (!in || magic != "P5" || maxval != 65535) throw IoError(path.string(), "not a 16-bit P5 image");
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (bytes.size() != offset + 2 * w * h) throw IoError(path.string(), "payload size mismatch");
  Pgm16Image img{w, h, std::vector<std::uint16_t>(w * h)};
  for (std::size_t k = 0; k < w * h; ++k)
    img.samples[k] = static_cast<std::uint16_t>((static_cast<unsigned char>(bytes[offset + 2 * k]) << 8) |
                                                static_cast<unsigned char>(bytes[offset + 2 * k + 1]));
  return img;
}

propagate::RealMap read_map(const fs::path& path, Format format) {
  propagate::RealMap map;
  switch (format) {
  case Format::csv: {
    const auto rows = read_csv(path, "x,y,value", 3);
    map.grid = grid_from_rows(rows, path);
    map.values.reserve(rows.size());
    for (const auto& r : rows) map.values.push_back(r[2]);
    break;
  }
  case Format::bin: {
    const std::string bytes = read_bytes(path);
    Cursor c{bytes, 0, path.string()};
    map.grid = read_bin_header(c, "LPRMAP01");
    if (bytes.size() != 48 + 8 * map.grid.size()) throw IoError(path.string(), "payload size mismatch");
    map.values.resize(map.grid.size());
    for (auto& v : map.values) v = c.f64();
    break;
  }
  case Format::pgm16: {
    const auto img = read_pgm16(path);
    const auto meta = read_meta(sidecar(path));
    const double lo = meta_number(meta, "min", path), hi = meta_number(meta, "max", path);
    map.grid.nx = img.width;
    map.grid.ny = img.height;
    map.grid.half_extent = meta_number(meta, "half_extent", path);
    map.grid.center_x = meta_number(meta, "center_x", path);
    map.grid.center_y = meta_number(meta, "center_y", path);
    map.values.resize(img.samples.size());
    for (std::size_t k = 0; k < img.samples.size(); ++k)
      map.values[k] = hi > lo ? lo + (hi - lo) * img.samples[k] / 65535.0 : lo;
    break;
  }
  }
  return map;
}

beamlab::ComplexField read_field(const fs::path& path, Format format) {
  beamlab::ComplexField field;
  switch (format) {
  case Format::csv: {
    const auto rows = read_csv(path, "x,y,re,im", 4);
    field = beamlab::ComplexField(grid_from_rows(rows, path));
    for (std::size_t k = 0; k < rows.size(); ++k) field.values[k] = {rows[k][2], rows[k][3]};
    break;
  }
  case Format::bin: {
    const std::string bytes = read_bytes(path);
    Cursor c{bytes, 0, path.string()};
    field = beamlab::ComplexField(read_bin_header(c, "LPCFLD01"));
    if (bytes.size() != 48 + 16 * field.grid.size()) throw IoError(path.string(), "payload size mismatch");
    for (auto& v : field.values) {
      const double re = c.f64();
      v = {re, c.f64()};
    }
    break;
  }
  case Format::pgm16:
    throw ValidationError("format", "pgm16 stores real maps only");
  }
  return field;
}

std::map<std::string, std::string> write_surface(const holonomy::SpectrumSurface& s, const fs::path& dir) {
  std::map<std::string, std::string> out;
  const int n = s.resolution;
  for (int b = 0; b < 3; ++b) {
    std::string bytes;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        if (i) bytes += ',';
        bytes += num(s.at(b, i, j));
      }
      bytes += '\n';
    }
    const auto path = dir / ("sheet_" + std::to_string(b) + ".csv");
    write_bytes(path, bytes);
    out[path.string()] = sha256_bytes(bytes);
  }
  auto points = [&](const std::vector<holonomy::TorusPoint>& pts, const std::string& name) {
    std::string bytes = "u,v\n";
    for (const auto& p : pts) bytes += num(p.u) + ',' + num(p.v) + '\n';
    const auto path = dir / name;
    write_bytes(path, bytes);
    out[path.string()] = sha256_bytes(bytes);
  };
  points(s.middle_zero_set, "zero_set.csv");
  points(s.degeneracy_points, "degeneracy_points.csv");
  std::string meta = "resolution=" + std::to_string(n) + "\nomega12=" + num(s.magnitudes.omega12) +
                     "\nomega23=" + num(s.magnitudes.omega23) + "\nomega13=" + num(s.magnitudes.omega13) +
                     "\nu_axis=phi12+phi23, u_i = 2 pi i / resolution, columns" +
                     "\nv_axis=phi13, v_j = 2 pi j / resolution, rows" +
                     "\nsheets=ascending eigenvalues\nzero_set_points=" +
                     std::to_string(s.middle_zero_set.size()) +
                     "\ndegeneracy_points=" + std::to_string(s.degeneracy_points.size()) + "\n";
  const auto path = dir / "surface.meta.txt";
  write_bytes(path, meta);
  out[path.string()] = sha256_bytes(meta);
  return out;
}

Report to_report(const holonomy::BerryResult& r) {
  return {
      {"gamma_closed", num(r.gamma_closed)},
      {"gamma_closed_mod_2pi", num(r.gamma_closed_mod())},
      {"gamma_wilson", num(r.gamma_wilson)},
      {"gamma_wilson_mod_2pi", num(r.gamma_wilson_mod())},
      {"loop_samples", std::to_string(r.loop_samples)},
      {"accumulated_phase", num(r.accumulated_phase)},
      {"accumulated_phase_mod_2pi", num(r.accumulated_phase_mod())},
      {"dynamical_phase", num(r.dynamical_phase)},
      {"adiabatic_fidelity", num(r.adiabatic_fidelity)},
      {"diabatic", r.diabatic ? "true" : "false"},
      {"max_norm_drift", num(r.max_norm_drift)},
  };
}

Report to_report(const protocol::ProtocolReport& r) {
  Report out{
      {"completed", r.completed ? "true" : "false"},
      {"diagnostic", r.diagnostic.empty() ? "none" : r.diagnostic},
      {"c", num(r.c)},
      {"c_estimate", num(r.c_estimate)},
      {"theta_bright_initial", num(r.theta_bright_initial)},
      {"phi_uniformity", num(r.phi_uniformity)},
      {"phi_spread", num(r.phi_spread)},
      {"ring_flatness", num(r.ring_flatness)},
      {"dark_state_accepted", r.dark_state_accepted ? "true" : "false"},
      {"theta_bright_final", num(r.theta_bright_final)},
      {"fringe_rotation", num(r.fringe_rotation)},
      {"recovered_gamma", num(r.recovered_gamma)},
      {"gamma_closed_mod_2pi", num(r.gamma_closed_mod)},
      {"recovery_error", num(r.recovery_error)},
      {"error_bound", num(r.error_bound)},
      {"resolvable", r.resolvable ? "true" : "false"},
  };
  for (auto& [k, v] : to_report(r.berry)) out.emplace_back("berry." + k, v);
  return out;
}

std::string format_report(const Report& report) {
  std::string out;
  for (const auto& [k, v] : report) out += k + "=" + v + "\n";
  return out;
}

std::string write_report(const Report& report, const fs::path& path) {
  const auto bytes = format_report(report);
  write_bytes(path, bytes);
  return sha256_bytes(bytes);
}

json report_json(const Report& report) {
  json out = json::object();
  for (const auto& [k, v] : report) {
    double d;
    if (parse_double(v, d)) out[k] = d;
    else if (v == "true" || v == "false") out[k] = v == "true";
    else out[k] = v;
  }
  return out;
}

void RunManifest::add_output(const fs::path& directory, const fs::path& file, const std::string& sha256) {
  outputs.push_back({fs::relative(file, directory).generic_string(), sha256});
}

void write_manifest(const RunManifest& m, const fs::path& path) {
  json outputs = json::array();
  for (const auto& o : m.outputs) outputs.push_back({{"path", o.path}, {"sha256", o.sha256}});
  const json doc{{"command", m.command}, {"version", m.version}, {"config", m.config},
                 {"outputs", outputs},   {"timings_s", m.timings_s}, {"results", m.results}};
  write_bytes(path, doc.dump(2) + "\n");
}

RunManifest read_manifest(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_bytes(path));
  } catch (const json::exception& e) {
    throw IoError(path.string(), std::string("bad manifest: ") + e.what());
  }
  RunManifest m;
  try {
    m.command = doc.at("command").get<std::string>();
    m.version = doc.at("version").get<std::string>();
    m.config = doc.at("config");
    for (const auto& o : doc.at("outputs"))
      m.outputs.push_back({o.at("path").get<std::string>(), o.at("sha256").get<std::string>()});
    m.timings_s = doc.at("timings_s").get<std::map<std::string, double>>();
    m.results = doc.at("results");
  } catch (const json::exception& e) {
    throw IoError(path.string(), std::string("bad manifest: ") + e.what());
  }
  return m;
}

std::vector<std::string> verify_manifest(const fs::path& path) {
  const auto m = read_manifest(path);
  const fs::path dir = path.parent_path();
  std::vector<std::string> bad;
  for (const auto& o : m.outputs) {
    const fs::path file = dir / o.path;
    if (!fs::exists(file) || sha256_file(file) != o.sha256) bad.push_back(o.path);
  }
  return bad;
}

} // namespace loopphase::artifacts
