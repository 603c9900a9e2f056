// Command-line front end; all functionality comes through the C API.
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bfda.h"

namespace {

std::vector<const char*> c_ptrs(const std::vector<std::string>& v) {
  std::vector<const char*> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(s.c_str());
  return out;
}

int report(bfda_status st) {
  if (st != BFDA_OK) std::fprintf(stderr, "bfda: %s\n", bfda_last_error());
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous Bayesian smoothing and mean-covariance estimation of functional data"};
  app.set_version_flag("--version", std::string(bfda_version()));
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  std::vector<std::string> set_kv;
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--set", set_kv, "dotted.key=value overrides on the config")
        ->take_all()
        ->expected(-1);
    cmd->add_option("--seed", seed, "override the seed")->each([&](const std::string&) {
      seed_given = true;
    });
    cmd->add_option("--out", out_dir, "output directory");
  };

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic benchmark dataset");
  double retain = -1.0;
  add_common(sim);
  sim->add_option("--retain", retain, "fraction of grid points retained per curve");

  // fit
  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler on a dataset");
  std::string data_path, data_format = "csv-long", scale_kernel, resume_dir;
  int chains = 1;
  long iters = -1, burnin = -1;
  bool dump_chains = false;
  add_common(fit);
  fit->add_option("--data", data_path, "input dataset")->required();
  fit->add_option("--format", data_format, "data format: csv-long or json");
  fit->add_option("--chains", chains, "number of independent chains");
  fit->add_option("--iters", iters, "total sweeps (burn-in + retained)");
  fit->add_option("--burnin", burnin, "burn-in sweeps");
  fit->add_option("--scale-kernel", scale_kernel, "scale kernel kind: matern, empirical, file");
  fit->add_flag("--dump-chains", dump_chains, "write retained scalar chains as CSV");
  fit->add_option("--resume", resume_dir, "resume from a checkpoint directory");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "score fits against simulation truth");
  std::vector<std::string> fit_dirs;
  std::string truth_dir, validation_path;
  add_common(eval);
  eval->add_option("--fit", fit_dirs, "fit output directory (repeatable)")
      ->take_all()
      ->expected(-1)
      ->required();
  eval->add_option("--truth", truth_dir, "simulate output directory")->required();
  eval->add_option("--validation", validation_path, "validation dataset CSV");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "Gelman-Rubin diagnostics over scalar chains");
  std::vector<std::string> chain_paths;
  add_common(diag);
  diag->add_option("--chains", chain_paths, "scalar-chain CSV (repeatable)")
      ->take_all()
      ->expected(-1)
      ->required();

  CLI11_PARSE(app, argc, argv);

  const auto kv = c_ptrs(set_kv);
  if (sim->parsed())
    return report(bfda_cmd_simulate(config_path.empty() ? nullptr : config_path.c_str(), kv.data(),
                                    kv.size(), seed_given ? 1 : 0, seed, retain, out_dir.c_str()));
  if (fit->parsed())
    return report(bfda_cmd_fit(data_path.c_str(), data_format.c_str(),
                               config_path.empty() ? nullptr : config_path.c_str(), kv.data(),
                               kv.size(), seed_given ? 1 : 0, seed, chains, iters, burnin,
                               scale_kernel.empty() ? nullptr : scale_kernel.c_str(),
                               dump_chains ? 1 : 0,
                               resume_dir.empty() ? nullptr : resume_dir.c_str(),
                               out_dir.c_str()));
  if (eval->parsed()) {
    const auto fds = c_ptrs(fit_dirs);
    return report(bfda_cmd_evaluate(fds.data(), fds.size(), truth_dir.c_str(),
                                    validation_path.empty() ? nullptr : validation_path.c_str(),
                                    out_dir.c_str()));
  }
  if (diag->parsed()) {
    const auto cps = c_ptrs(chain_paths);
    return report(bfda_cmd_diagnose(cps.data(), cps.size(), out_dir.c_str()));
  }
  return 1;
}
