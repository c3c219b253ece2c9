#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "coarse/space.hpp"
#include "coarse/stream.hpp"

// Benchmark harness: run any estimator against a generator or a stream file,
// compare every trial to the exact oracle, account sketch space in bits, and
// emit deterministic CSV.

namespace coarse {

struct ExperimentConfig {
  std::string estimator;                    // registry id
  std::string source;                       // "gen:<kind>" or "file:<path>"
  int trials = 1;
  uint64_t master_seed = 1;
  std::string out_path;                     // empty = stdout only when run via CLI
  std::map<std::string, std::string> params;

  double get_num(const std::string& key, double fallback) const;
  uint64_t get_int(const std::string& key, uint64_t fallback) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;

  // key = value lines; '#' comments. The reserved keys estimator, source,
  // trials, seed and out fill the struct fields, everything else lands in
  // params.
  static ExperimentConfig parse(std::istream& in);
  static ExperimentConfig load(const std::string& path);
  void serialize(std::ostream& out) const;
};

struct TrialRow {
  int trial = 0;
  uint64_t seed = 0;
  double exact = 0.0;
  double estimate = 0.0;
  double ratio = 0.0;
  bool success = false;
  SpaceReport space;
};

struct ExperimentResult {
  std::vector<TrialRow> rows;
  double success_rate = 0.0;
  double floor = 0.0;  // contract probability minus the Monte Carlo slack
  bool pass = false;

  std::string csv() const;
};

// Runs cfg.trials trials with per-trial derived seeds, in parallel across a
// small thread pool; row order is by trial index, so output is deterministic.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 2);

// Known estimator and generator ids, for error messages and the CLI.
std::vector<std::string> estimator_ids();
std::vector<std::string> generator_ids();

// Builds the per-trial input stream named by "gen:<kind>".
TurnstileStream build_generated_stream(const ExperimentConfig& cfg, uint64_t seed);
MatrixStream build_generated_matrix(const ExperimentConfig& cfg, uint64_t seed);

// Heavy-hitter extraction for one trial of cfg; returns the sorted index set
// (the CLI prints it on standard output).
std::vector<uint64_t> run_heavy_extraction(const ExperimentConfig& cfg, int trial);

}  // namespace coarse
