#pragma once

// Run configuration, map/field serialization and the run manifest.
//
// Formats:
//   csv   - header "x,y,value" (maps) or "x,y,re,im" (fields), one row per
//           pixel in storage order, shortest round-trip decimal numbers.
//   bin   - 48-byte header: 8-byte magic ("LPRMAP01" maps, "LPCFLD01" fields),
//           u64 nx, u64 ny, f64 half_extent, f64 center_x, f64 center_y, then
//           the f64 payload (re, im interleaved for fields). All little-endian.
//   pgm16 - binary P5, maxval 65535, big-endian samples, first row = lowest y.
//           Values scale linearly from min to max; min == max maps every pixel
//           to 0. A sidecar "<path>.meta.txt" records min, max and the layout.

#include "loopphase/holonomy.hpp"
#include "loopphase/propagate.hpp"
#include "loopphase/protocol.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace loopphase::artifacts {

inline constexpr const char* software_version = "0.1.0";

enum class Format { csv, pgm16, bin };

Format parse_format(const std::string& name);
std::string format_name(Format f);
std::string format_extension(Format f);

/// Radians, or degrees with a "deg" suffix ("45deg", "45 deg").
double parse_angle(const std::string& text);

struct RunConfig {
  beamlab::LGModeSpec probe{1, 0, 100.0, 0.78, 1.0}; ///< amplitude follows coupling.omega13
  beamlab::LGModeSpec pump{0, 0, 100.0, 0.78, 1.0};  ///< amplitude follows coupling.omega23
  /// Rabi magnitudes are peak values over the beam profile.
  atomcore::CouplingConfig coupling{0.1, 5.0, 0.1, 0.0, 0.0, 0.0};
  atomcore::RelaxationConfig relaxation{};
  bool gamma23_set = false; ///< false: gamma23 = (gamma13 + gamma12) / 2
  propagate::PropagationParams propagation{};
  beamlab::GridSpec grid{512, 512, 300.0, 0.0, 0.0};
  bool half_extent_set = false; ///< false: half_extent follows 3 w0 of the probe
  double plane_z = 0.0;         ///< axial plane at which the beams are sampled

  propagate::RingOptions ring{};
  double ring_radius = 0.0; ///< 0: w0 sqrt(|l| / 2)

  holonomy::Magnitudes berry{1.0, 1.0, 1.0};
  holonomy::AdiabaticOptions adiabatic{};
  int spectrum_resolution = 64;
  double protocol_c = 0.0;

  Format output_format = Format::csv;
  unsigned long long seed = 0; ///< reserved

  /// Fills the derived defaults (gamma23, half_extent) and validates.
  void finalize();
  void validate() const;
  propagate::Scene scene() const;
  double effective_ring_radius() const;
};

/// Parses a YAML configuration. Unknown keys, parse errors and invalid values
/// raise ValidationError naming the key (and the line number where known).
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");

nlohmann::json to_json(const RunConfig& config);

/// Lowercase hex SHA-256 of a file or byte string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(const std::string& bytes);

/// Writes `map` and returns the SHA-256 of the main output file.
std::string write_map(const propagate::RealMap& map, const std::filesystem::path& path, Format format);
std::string write_field(const beamlab::ComplexField& field, const std::filesystem::path& path,
                        Format format);

propagate::RealMap read_map(const std::filesystem::path& path, Format format);
beamlab::ComplexField read_field(const std::filesystem::path& path, Format format);

struct Pgm16Image {
  std::size_t width = 0, height = 0;
  std::vector<std::uint16_t> samples; ///< row-major, first row = lowest y
};
Pgm16Image read_pgm16(const std::filesystem::path& path);

/// Spectrum sheets as three CSV matrices (rows = v, columns = u) plus a
/// metadata file. Returns path -> checksum.
std::map<std::string, std::string> write_surface(const holonomy::SpectrumSurface& surface,
                                                 const std::filesystem::path& directory);

using Report = std::vector<std::pair<std::string, std::string>>;

Report to_report(const holonomy::BerryResult& result);
Report to_report(const protocol::ProtocolReport& report);
std::string format_report(const Report& report);
std::string write_report(const Report& report, const std::filesystem::path& path);
nlohmann::json report_json(const Report& report);

struct OutputRecord {
  std::string path; ///< relative to the manifest directory
  std::string sha256;
};

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::string version = software_version;
  std::vector<OutputRecord> outputs;
  std::map<std::string, double> timings_s;
  nlohmann::json results = nlohmann::json::object();

  void add_output(const std::filesystem::path& directory, const std::filesystem::path& file,
                  const std::string& sha256);
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

/// Paths whose current checksum differs from the manifest (missing files included).
std::vector<std::string> verify_manifest(const std::filesystem::path& path);

} // namespace loopphase::artifacts
