#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kpos/checkers.hpp"

namespace kpos::cli {

using json = nlohmann::ordered_json;

struct CheckEntry {
  CheckSpec spec;
  SampleConfig cfg;
};

struct PathSpec {
  int split = 0;
  std::vector<double> chi;  // per generator
  json chi_json;            // as written, by generator name
  std::vector<double> t_grid;
};

struct CrosstableSpec {
  int k = 1;
  bool include_reversed = false;
  long max_rows = 20000;
};

// Parsed experiment. The representation is kept as JSON and built on demand so
// that construction errors are reported separately from config errors.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  json representation;
  SampleConfig sampling;
  std::vector<CheckEntry> checks;
  std::optional<PathSpec> path;
  int sweep_k = 1;
  CrosstableSpec crosstable;
  std::string out_dir = "out";
  int jobs = 1;

  // Effective configuration with every default filled in. The output
  // directory is left out so that reports do not depend on it.
  json to_json() const;
};

// Throws ConfigError on unknown keys, missing seed or malformed values.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::string& path);
// Command line overrides; cascade into every per-check configuration.
void set_seed(ExperimentConfig& c, std::uint64_t seed);
void set_jobs(ExperimentConfig& c, int jobs);

MarkedRep build_rep(const json& spec);
Holonomy2 build_holonomy(const json& spec);
DeformationPath build_path(const ExperimentConfig& c);

json report_json(const CheckReport& r);
json sample_config_json(const SampleConfig& c);
// Finite doubles as numbers, others as "inf", "-inf" or "nan".
json number(double v);
std::string csv_double(double v);
// Lowercase file-safe name, e.g. "Hk*" -> "hk_star".
std::string file_stem(const CheckSpec& s);

int exit_code(Verdict v);
int exit_code(const Error& e);

// Each writes into c.out_dir and returns the process exit code; errors throw.
int cmd_check(const ExperimentConfig& c, std::ostream& log);
int cmd_sweep(const ExperimentConfig& c, std::ostream& log);
int cmd_crosstable(const ExperimentConfig& c, std::ostream& log);

// Maps thrown errors to exit codes and prints them to err.
int run_command(const std::string& command, const ExperimentConfig& c, std::ostream& log, std::ostream& err);

}  // namespace kpos::cli
