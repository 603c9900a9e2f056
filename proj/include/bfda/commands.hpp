#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bfda/empirical_bayes.hpp"
#include "bfda/gibbs.hpp"
#include "bfda/simulation.hpp"
#include "bfda/types.hpp"

namespace bfda::commands {

/// Shared command-line surface: a JSON config file, dotted key=value
/// overrides applied on top, an optional seed override, and an output
/// directory. Every command writes a manifest.json next to its outputs.
struct CommonOptions {
  std::string config_path;                 // optional; {} when empty
  std::vector<std::string> set_overrides;  // "a.b=value"
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

struct SimulateOptions {
  CommonOptions common;
  std::optional<double> retain;  // --retain shortcut
};

struct FitOptions {
  CommonOptions common;
  std::string data_path;
  std::string data_format = "csv-long";
  int chains = 1;
  std::optional<long> iters;    // total sweeps (burnin + samples)
  std::optional<long> burnin;
  std::optional<std::string> scale_kernel;  // --scale-kernel shortcut
  bool dump_chains = false;
  std::string resume_dir;  // resume chain 0 from this checkpoint
};

struct EvaluateOptions {
  CommonOptions common;
  std::vector<std::string> fit_dirs;  // one or more fit output directories
  std::string truth_dir;              // simulate output directory
  std::string validation_path;        // optional CSV of validation data
};

struct DiagnoseOptions {
  CommonOptions common;
  std::vector<std::string> chain_paths;  // scalar-chain CSVs
};

int cmd_simulate(const SimulateOptions& opt);
int cmd_fit(const FitOptions& opt);
int cmd_evaluate(const EvaluateOptions& opt);
int cmd_diagnose(const DiagnoseOptions& opt);

/// Maps library exceptions to the documented exit codes and prints the
/// message to stderr: 2 config, 3 data, 4 numeric, 1 anything else.
int run_guarded(int (*fn)(const void*), const void* opt);

/// Parsed fit configuration: empirical-Bayes knobs plus sampler settings.
struct FitConfig {
  EbConfig eb;
  SamplerConfig sampler;
};

FitConfig parse_fit_config(const std::string& json_text);
SimSpec parse_sim_spec(const std::string& json_text);

/// Applies "dotted.key=value" overrides onto a JSON document (values parse
/// as JSON when possible, else as strings).
std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides);

}  // namespace bfda::commands
