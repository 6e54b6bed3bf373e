#pragma once

#include <cstdint>
#include <fstream>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "singlim/experiments.hpp"

namespace singlim {

// Invalid configuration (bad keys, out-of-range parameters, missing files
// that should exist before any computation). The CLI maps this to exit 2;
// runtime failures map to exit 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SimulateBlock {
  Model model = Model::ChAcHomotopy;
  double eps = 0.1;
  SigmaSchedule schedule;
  Mollifier mollifier = Mollifier::None;
  double c_zero = 0.0;
  InitialData initial;
  Scheme scheme = Scheme::IMEX;
  int snapshot_stride = 1;
  std::vector<double> snapshots;  // field-dump times, must lie in [0, T]
  bool dump_fields = false;
  bool zero_k0 = false;
};

struct StudyBlock {
  std::string mode = "convergence";  // convergence | theorem | regimes
  StudyConfig study;
};

struct RenormBlock {
  Model model = Model::ChAcHomotopy;
  std::vector<double> eps_grid;
  SigmaSchedule schedule;
  std::vector<int> cutoffs;
  std::vector<double> deltas;
  bool c_zero_request = false;
};

// One flat JSON document per run: a command-independent block {n, T, dt,
// master_seed, output_dir} plus exactly one command block. Unknown keys are
// rejected everywhere; parse -> serialize -> parse is the identity on the
// resolved config.
struct RunConfigFile {
  int n = 64;
  double T = 0.5;
  double dt = 1e-3;
  std::uint64_t master_seed = 0;
  std::string output_dir;
  std::optional<SimulateBlock> simulate;
  std::optional<StudyBlock> study;
  std::optional<RenormBlock> renorm;
};

RunConfigFile parse_config_text(const std::string& text);
RunConfigFile parse_config_file(const std::string& path);
std::string serialize_config(const RunConfigFile& cfg);

std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t h = 0xcbf29ce484222325ull);

// Append-only NDJSON sink with exclusive writes; every line is flushed so an
// interrupted run leaves a valid prefix. Tracks the FNV-1a checksum of all
// emitted bytes.
class NdjsonWriter {
 public:
  explicit NdjsonWriter(const std::string& path);
  void write_line(const std::string& json_object);
  std::uint64_t checksum() const { return checksum_; }
  std::size_t lines() const { return lines_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  mutable std::mutex mu_;
  std::uint64_t checksum_ = 0xcbf29ce484222325ull;
  std::size_t lines_ = 0;
};

struct ManifestOutput {
  std::string path;  // relative to the run directory
  std::string checksum_fnv1a64;
  std::size_t lines = 0;
};

struct Manifest {
  std::string version;
  std::string command;
  std::string status;  // "incomplete" while running, "complete" at the end
  std::string started;
  std::string finished;
  std::string resolved_config_json;
  int workers = 1;
  std::string workers_source;  // "flag" | "env" | "default"
  std::vector<ManifestOutput> outputs;
};

// Serializes to <dir>/manifest.json via a temp file + rename (atomic on the
// same filesystem).
void write_manifest(const std::string& dir, const Manifest& m);

struct CmdOptions {
  std::string config_path;
  std::string out_dir;  // overrides the config's output_dir when nonempty
  int workers = 0;      // 0: resolve from env var / hardware
  std::string workers_source = "default";
  bool force = false;
};

// Resolve worker count: explicit flag > SINGLIM_WORKERS env var > hardware
// concurrency; records the source in opts.workers_source.
void resolve_workers(CmdOptions& opts);

int cmd_simulate(const CmdOptions& opts);
int cmd_study(const CmdOptions& opts);
int cmd_renorm(const CmdOptions& opts);
// Fast invariant suite (transform roundtrip, cubic gap sampling, reduced OU
// statistics, operator bound); exit 0 iff all pass, else 1 with the failing
// invariant named on the diagnostic stream. The env var
// SINGLIM_CHECK_FLIP_LAMBDA=1 corrupts the probed eigenvalue sign so the
// failure path itself stays testable.
int cmd_check();

}  // namespace singlim
