#include "doctest.h"

#include "loopphase/artifacts.hpp"
#include "loopphase/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace loopphase;
using artifacts::Format;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("loopphase_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

propagate::RealMap sample_map() {
  propagate::RealMap m{{13, 9, 2.5, 0.25, -0.5}, {}};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d(0.0, 1e3);
  for (std::size_t k = 0; k < m.grid.size(); ++k) m.values.push_back(d(rng) * std::pow(10.0, int(k % 7) - 3));
  return m;
}

beamlab::ComplexField sample_field() {
  return beamlab::sample_field({2, 1, 1.0, 1.0, 0.3}, {11, 7, 2.0, 0.1, 0.2});
}

} // namespace

TEST_SUITE("artifacts") {

TEST_CASE("maps and fields round-trip exactly through csv and bin") {
  TempDir tmp;
  const auto m = sample_map();
  const auto f = sample_field();
  for (Format fmt : {Format::csv, Format::bin}) {
    const auto mp = tmp.path / ("m." + artifacts::format_extension(fmt));
    const auto fp = tmp.path / ("f." + artifacts::format_extension(fmt));
    artifacts::write_map(m, mp, fmt);
    artifacts::write_field(f, fp, fmt);
    const auto m2 = artifacts::read_map(mp, fmt);
    const auto f2 = artifacts::read_field(fp, fmt);
    CHECK(m2.values == m.values);
    CHECK(f2.values == f.values);
    for (const auto* g : {&m2.grid, &f2.grid}) {
      const auto& ref = g == &m2.grid ? m.grid : f.grid;
      CHECK(g->nx == ref.nx);
      CHECK(g->ny == ref.ny);
      if (fmt == Format::bin) {
        CHECK(*g == ref);
      } else {
        // csv keeps pixel-centre coordinates only; the window is rebuilt from them.
        CHECK(g->half_extent == doctest::Approx(ref.half_extent).epsilon(1e-14));
        CHECK(g->center_x == doctest::Approx(ref.center_x).epsilon(1e-14));
        CHECK(g->center_y == doctest::Approx(ref.center_y).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("pgm16 quantizes linearly with the lowest row first") {
  TempDir tmp;
  propagate::RealMap m{{3, 2, 1.0, 0.0, 0.0}, {0.0, 1.0, 2.0, 3.0, 4.0, 4.0}};
  artifacts::write_map(m, tmp.path / "m.pgm", Format::pgm16);
  const auto img = artifacts::read_pgm16(tmp.path / "m.pgm");
  CHECK(img.width == 3);
  CHECK(img.height == 2);
  CHECK(img.samples == std::vector<std::uint16_t>{0, 16384, 32768, 49151, 65535, 65535});
  CHECK(fs::exists(tmp.path / "m.pgm.meta.txt"));
  const auto back = artifacts::read_map(tmp.path / "m.pgm", Format::pgm16);
  for (std::size_t k = 0; k < m.values.size(); ++k) CHECK(std::abs(back.values[k] - m.values[k]) <= 4.0 / 65535.0);
}

TEST_CASE("constant map encodes as zeros") {
  TempDir tmp;
  propagate::RealMap m{{4, 4, 1.0, 0.0, 0.0}, std::vector<double>(16, 2.5)};
  artifacts::write_map(m, tmp.path / "c.pgm", Format::pgm16);
  const auto img = artifacts::read_pgm16(tmp.path / "c.pgm");
  CHECK(img.samples == std::vector<std::uint16_t>(16, 0));
}

TEST_CASE("writes are deterministic") {
  TempDir tmp;
  const auto m = sample_map();
  for (Format fmt : {Format::csv, Format::bin, Format::pgm16}) {
    const auto a = artifacts::write_map(m, tmp.path / ("a." + artifacts::format_extension(fmt)), fmt);
    const auto b = artifacts::write_map(m, tmp.path / ("b." + artifacts::format_extension(fmt)), fmt);
    CHECK(a == b);
    CHECK(a.size() == 64);
  }
}

TEST_CASE("sha256 known answers") {
  CHECK(artifacts::sha256_bytes("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(artifacts::sha256_bytes("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("truncated and mislabelled files are rejected") {
  TempDir tmp;
  const auto p = tmp.path / "m.bin";
  artifacts::write_map(sample_map(), p, Format::bin);
  fs::resize_file(p, fs::file_size(p) - 8);
  CHECK_THROWS_AS(artifacts::read_map(p, Format::bin), IoError);
  artifacts::write_field(sample_field(), p, Format::bin);
  CHECK_THROWS_AS(artifacts::read_map(p, Format::bin), IoError);
  CHECK_THROWS_AS(artifacts::read_map(tmp.path / "missing.csv", Format::csv), IoError);
}

TEST_CASE("config defaults and derived values") {
  const auto c = artifacts::parse_config("probe:\n  l: 2\n  w0: 50\nrelaxation:\n  gamma12: 0.01\n");
  CHECK(c.probe.l == 2);
  CHECK(c.grid.half_extent == doctest::Approx(150.0));
  CHECK(c.relaxation.gamma23 == doctest::Approx((1.0 + 0.01) / 2.0));
  CHECK(c.effective_ring_radius() == doctest::Approx(50.0));
  const auto explicit_g = artifacts::parse_config("relaxation:\n  gamma23: 0.3\ngrid:\n  half_extent: 400\n");
  CHECK(explicit_g.relaxation.gamma23 == 0.3);
  CHECK(explicit_g.grid.half_extent == 400.0);
}

TEST_CASE("angles accept degrees") {
  CHECK(artifacts::parse_angle("1.5") == 1.5);
  CHECK(artifacts::parse_angle("90deg") == doctest::Approx(std::numbers::pi / 2.0));
  CHECK(artifacts::parse_angle("45 deg") == doctest::Approx(std::numbers::pi / 4.0));
  const auto c = artifacts::parse_config("coupling:\n  phi12: 60deg\n");
  CHECK(c.coupling.phi12 == doctest::Approx(std::numbers::pi / 3.0));
  CHECK_THROWS_AS(artifacts::parse_angle("north"), ValidationError);
}

TEST_CASE("unknown keys name the key and line") {
  try {
    artifacts::parse_config("probe:\n  l: 1\n  waist: 3\n");
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "probe.waist");
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(artifacts::parse_config("colour: red\n"), ValidationError);
}

TEST_CASE("invalid values name the offending field") {
  try {
    artifacts::parse_config("probe:\n  w0: -3\n");
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "probe.w0");
  }
  CHECK_THROWS_AS(artifacts::parse_config("propagation:\n  n_z: 0\n"), ValidationError);
  CHECK_THROWS_AS(artifacts::parse_config("probe: [1, 2\n"), ValidationError);
}

TEST_CASE("config serializes to json") {
  const auto j = artifacts::to_json(artifacts::parse_config("probe:\n  l: 3\n"));
  CHECK(j["probe"]["l"] == 3);
  CHECK(j["output"]["format"] == "csv");
}

TEST_CASE("manifest records and verifies checksums") {
  TempDir tmp;
  artifacts::RunManifest man;
  man.command = "render";
  const auto sha = artifacts::write_map(sample_map(), tmp.path / "m.csv", Format::csv);
  man.add_output(tmp.path, tmp.path / "m.csv", sha);
  man.timings_s["render"] = 0.5;
  artifacts::write_manifest(man, tmp.path / "manifest.json");

  const auto back = artifacts::read_manifest(tmp.path / "manifest.json");
  REQUIRE(back.outputs.size() == 1);
  CHECK(back.outputs[0].path == "m.csv");
  CHECK(back.outputs[0].sha256 == sha);
  CHECK(back.version == artifacts::software_version);
  CHECK(artifacts::verify_manifest(tmp.path / "manifest.json").empty());

  std::ofstream(tmp.path / "m.csv", std::ios::app) << "0,0,0\n";
  CHECK(artifacts::verify_manifest(tmp.path / "manifest.json") == std::vector<std::string>{"m.csv"});
  fs::remove(tmp.path / "m.csv");
  CHECK(artifacts::verify_manifest(tmp.path / "manifest.json") == std::vector<std::string>{"m.csv"});
}

TEST_CASE("reports format as key=value lines") {
  holonomy::BerryResult r;
  r.gamma_closed = -1.0;
  const auto rep = artifacts::to_report(r);
  const auto text = artifacts::format_report(rep);
  CHECK(text.find("gamma_closed=-1\n") != std::string::npos);
  CHECK(artifacts::report_json(rep)["diabatic"] == false);
}

}
