// Run configuration, persistence and the subcommand pipelines.
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrdecay/analysis.hpp"
#include "kerrdecay/evolution.hpp"

namespace kerrdecay {

/// All violations found while parsing or validating a config.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MultiplierSettings {
  double gamma = 1.6;
  double delta = 0.05;
  double R2 = 4.0;
  std::vector<double> radii{5.0, 20.0, 100.0};
  std::vector<double> steps{0.2, 0.1, 0.05};
};

struct RunConfig {
  EvolutionConfig evolution;
  TheoremCheck analysis;
  std::vector<double> le_windows;  // t1 of each [0, t1] LE window
  MultiplierSettings multipliers;
};

/// INI text with sections [background] [grid] [data] [nonlinearity] [output]
/// [probes] [analysis] [multipliers]. Unset keys keep their defaults; unknown
/// sections or keys are errors. Throws ConfigError listing every problem,
/// including all cross-field violations reported by validate().
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
/// Every key, in a form parse_config reads back to the same values.
std::string serialize_config(const RunConfig& config);

// Snapshot format: "KDSNAP1\0", u32 byte-order mark 0x01020304, u32 engine,
// f64 time, u64 n, n f64 phi, n f64 pi, all in the writer's byte order.
std::vector<unsigned char> encode_snapshot(const FieldSlice& slice, Engine engine);
/// Throws SnapshotError on bad magic, unknown byte order or truncation.
FieldSlice decode_snapshot(const std::vector<unsigned char>& bytes, Engine* engine = nullptr);
void save_snapshot(const std::filesystem::path& path, const FieldSlice& slice, Engine engine);
FieldSlice load_snapshot(const std::filesystem::path& path, Engine* engine = nullptr);

/// t,station_id,phi,dphi_dt,dphi_dr
std::string probe_csv(const std::vector<ProbeSample>& probes);

struct ArtifactEntry {
  std::string name;
  std::string checksum;  // FNV-1a 64, hex
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::string subcommand;
  std::string config_hash;
  std::string code_version;
  std::string start_time;
  std::string end_time;
  std::string outcome;  // completed | blow-up | error
  std::string message;
  double blowup_time = 0.0;
  double blowup_location = 0.0;
  std::vector<ArtifactEntry> files;
};

std::string code_version();
std::string utc_timestamp();

/// Runs one of evolve, norms, fit, check-geometry, check-operators,
/// check-multipliers, convergence into `out_dir`, then writes manifest.json
/// by atomic rename. Exceptions from the pipeline give outcome "error" with
/// the partial outputs listed.
RunManifest run(const std::string& subcommand, const RunConfig& config,
                const std::filesystem::path& out_dir);

/// Writes `name` into the run directory and records it in the manifest.
class ArtifactWriter {
 public:
  ArtifactWriter(std::filesystem::path dir, RunManifest& manifest);
  void write(const std::string& name, const std::string& text);
  void write(const std::string& name, const std::vector<unsigned char>& bytes);

 private:
  std::filesystem::path dir_;
  RunManifest& manifest_;
};

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& out_dir);

}  // namespace kerrdecay
