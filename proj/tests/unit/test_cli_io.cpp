#include <algorithm>
#include <bit>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "kerrdecay/cli_io.hpp"

using namespace kerrdecay;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(
[grid]
engine = E1
rstar_min = -60
rstar_max = 120
h = 0.2

[output]
T_final = 20
dt_out = 1
monitor_norms = false

[probes]
x = 30
)";

std::vector<std::string> errors_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.errors();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& errors, const std::string& needle) {
  return std::any_of(errors.begin(), errors.end(), [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kerrdecay_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("minimal config keeps defaults") {
  const RunConfig c = parse_config("[background]\nM = 1\n");
  const RunConfig d;
  CHECK(c.evolution.params.a == d.evolution.params.a);
  CHECK(c.evolution.h == d.evolution.h);
  CHECK(c.evolution.nl.p == 3);
  CHECK(c.analysis.t_min == d.analysis.t_min);
  CHECK(parse_config("").evolution.T_final == d.evolution.T_final);
}

TEST_CASE("config errors are collected") {
  const auto e = errors_of("[data]\nR1 = 5000\n[background]\na = 0.6\n");
  CHECK(any_contains(e, "R1"));
  CHECK(any_contains(e, "rstar_max"));
  CHECK(any_contains(e, "small-a"));

  const auto u = errors_of("[grid]\nhh = 1\nh = abc\n[colour]\nx = 1\n");
  CHECK(u.size() == 3);
  CHECK(any_contains(u, "unknown key [grid] hh"));
  CHECK(any_contains(u, "not a number"));
  CHECK(any_contains(u, "[colour] x"));

  CHECK(any_contains(errors_of("[grid]\nengine = E3\n"), "E1 or E2"));
  CHECK(any_contains(errors_of("[nonlinearity]\nsign = 2\n"), "sign"));
  CHECK(any_contains(errors_of("[output]\nle_windows = 50, 500\n"), "le_windows"));
  CHECK_FALSE(errors_of("[grid\n").empty());
}

TEST_CASE("serialize and parse round trip") {
  RunConfig c = parse_config(kSmall);
  c.evolution.params.M = 1.25;
  c.evolution.data.epsilon = 0.0123456789012345;
  c.evolution.gammas = {0.5, 1.5};
  c.evolution.probe_u = {10, 20};
  c.multipliers.radii = {7.0};
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.evolution.data.epsilon == c.evolution.data.epsilon);
  CHECK(back.evolution.gammas == c.evolution.gammas);
}

TEST_CASE("snapshot round trip and corruption") {
  FieldSlice s;
  s.time = 12.5;
  for (int i = 0; i < 7; ++i) {
    s.phi.push_back(0.1 * i - 0.25);
    s.pi.push_back(std::ldexp(1.0, -i));
  }
  const auto bytes = encode_snapshot(s, Engine::E2);
  Engine e = Engine::E1;
  const FieldSlice back = decode_snapshot(bytes, &e);
  CHECK(e == Engine::E2);
  CHECK(back.time == s.time);
  CHECK(back.phi == s.phi);
  CHECK(back.pi == s.pi);

  auto cut = bytes;
  cut.resize(cut.size() - 3);
  CHECK_THROWS_AS(decode_snapshot(cut), SnapshotError);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_snapshot(bad), SnapshotError);

  // Same content written on a machine of the other byte order.
  std::vector<unsigned char> foreign(bytes.begin(), bytes.begin() + 8);
  auto swapped = [&](std::size_t at, std::size_t width) {
    for (std::size_t k = 0; k < width; ++k) foreign.push_back(bytes[at + width - 1 - k]);
  };
  swapped(8, 4);
  swapped(12, 4);
  for (std::size_t at = 16; at < bytes.size(); at += 8) swapped(at, 8);
  const FieldSlice f = decode_snapshot(foreign, &e);
  CHECK(e == Engine::E2);
  CHECK(f.time == s.time);
  CHECK(f.phi == s.phi);
  CHECK(f.pi == s.pi);

  const fs::path dir = scratch("snap");
  fs::create_directories(dir);
  save_snapshot(dir / "a.kdsnap", s, Engine::E1);
  CHECK(load_snapshot(dir / "a.kdsnap").phi == s.phi);
  CHECK_THROWS_AS(load_snapshot(dir / "missing.kdsnap"), SnapshotError);
  fs::remove_all(dir);
}

TEST_CASE("evolve of zero data") {
  RunConfig c = parse_config(kSmall);
  c.evolution.data.epsilon = 0.0;
  const fs::path dir = scratch("zero");
  const RunManifest m = run("evolve", c, dir);
  CHECK(m.outcome == "completed");
  std::ifstream in(dir / "probes.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,station_id,phi,dphi_dt,dphi_dr");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const auto fields = line.substr(line.find(',', line.find(',') + 1) + 1);
    CHECK(fields == "0,0,0");
  }
  CHECK(rows == 21);
  fs::remove_all(dir);
}

TEST_CASE("reruns are reproducible and manifests are final") {
  RunConfig c = parse_config(kSmall);
  c.evolution.data.epsilon = 0.1;
  c.evolution.snapshot_times = {10.0};
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  const RunManifest ma = run("evolve", c, a);
  const RunManifest mb = run("evolve", c, b);
  REQUIRE(ma.files.size() == mb.files.size());
  for (std::size_t i = 0; i < ma.files.size(); ++i) {
    CHECK(ma.files[i].name == mb.files[i].name);
    CHECK(ma.files[i].checksum == mb.files[i].checksum);
  }
  CHECK(ma.config_hash == mb.config_hash);
  const RunManifest read = read_manifest(a);
  CHECK(read.outcome == "completed");
  CHECK(read.files.size() == ma.files.size());
  CHECK(fs::exists(a / "snap_t10.kdsnap"));
  CHECK_FALSE(fs::exists(a / "manifest.json.tmp"));

  const RunManifest err = run("no-such-command", c, b);
  CHECK(err.outcome == "error");
  CHECK(read_manifest(b).outcome == "error");
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("focusing blow-up keeps partial outputs") {
  RunConfig c = parse_config(kSmall);
  c.evolution.nl = {3, -1, true};
  c.evolution.data.epsilon = 20.0;
  const fs::path dir = scratch("blowup");
  const RunManifest m = run("evolve", c, dir);
  CHECK(m.outcome == "blow-up");
  CHECK(m.blowup_time > 0.0);
  CHECK(m.blowup_time < c.evolution.T_final);
  CHECK(m.blowup_location > 0.0);
  const RunManifest r = read_manifest(dir);
  CHECK(r.blowup_time == m.blowup_time);
  CHECK(fs::exists(dir / "probes.csv"));
  fs::remove_all(dir);
}

TEST_CASE("check subcommands write their tables") {
  RunConfig c;
  c.evolution.params = {1.0, 0.2};
  const fs::path dir = scratch("checks");
  for (const char* sub : {"check-operators", "check-multipliers"}) {
    const RunManifest m = run(sub, c, dir);
    CHECK(m.outcome == "completed");
    CHECK(m.files.size() == 2);
  }
  fs::remove_all(dir);
}
