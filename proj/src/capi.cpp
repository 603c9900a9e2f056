#include "bfda.h"

#include <cstring>
#include <memory>
#include <string>

#include "bfda/commands.hpp"
#include "bfda/dataset.hpp"
#include "bfda/empirical_bayes.hpp"
#include "bfda/gibbs.hpp"
#include "bfda/posterior.hpp"
#include "bfda/version.hpp"

namespace {

thread_local std::string g_last_error;

bfda_status to_status(const std::exception& e) {
  g_last_error = e.what();
  if (dynamic_cast<const bfda::config_error*>(&e)) return BFDA_ERROR_CONFIG;
  if (dynamic_cast<const bfda::data_error*>(&e)) return BFDA_ERROR_DATA;
  if (dynamic_cast<const bfda::numeric_error*>(&e)) return BFDA_ERROR_NUMERIC;
  return BFDA_ERROR;
}

template <typename Fn>
bfda_status guarded(Fn&& fn) {
  try {
    fn();
    return BFDA_OK;
  } catch (const std::exception& e) {
    return to_status(e);
  } catch (...) {
    g_last_error = "unknown failure";
    return BFDA_ERROR;
  }
}

std::vector<std::string> to_strings(const char* const* arr, size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.emplace_back(arr[i] ? arr[i] : "");
  return out;
}

}  // namespace

struct bfda_dataset {
  bfda::FunctionalDataset data;
};

struct bfda_fit {
  bfda::Chain chain;
  bfda::PosteriorSummary summary;
};

extern "C" {

const char* bfda_version(void) { return bfda::kVersion; }

const char* bfda_last_error(void) { return g_last_error.c_str(); }

bfda_status bfda_dataset_load(const char* path, const char* format, bfda_dataset** out) {
  return guarded([&] {
    if (!path || !format || !out) throw bfda::config_error("null argument");
    auto handle = std::make_unique<bfda_dataset>();
    handle->data = bfda::load_dataset(path, bfda::format_from_name(format));
    *out = handle.release();
  });
}

bfda_status bfda_dataset_save(const bfda_dataset* data, const char* path, const char* format) {
  return guarded([&] {
    if (!data || !path || !format) throw bfda::config_error("null argument");
    bfda::save_dataset(data->data, path, bfda::format_from_name(format));
  });
}

void bfda_dataset_free(bfda_dataset* data) { delete data; }

int64_t bfda_dataset_n_curves(const bfda_dataset* data) {
  return data ? static_cast<int64_t>(data->data.n_curves()) : -1;
}

int64_t bfda_dataset_pooled_size(const bfda_dataset* data) {
  if (!data) return -1;
  try {
    return static_cast<int64_t>(bfda::pool_grids(data->data).size());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return -1;
  }
}

bfda_status bfda_fit_run(const bfda_dataset* data, const char* config_json, bfda_fit** out) {
  return guarded([&] {
    if (!data || !out) throw bfda::config_error("null argument");
    const std::string cfg = config_json ? config_json : "{}";
    bfda::commands::FitConfig fc = bfda::commands::parse_fit_config(cfg);
    const bfda::PooledGrid grid = bfda::pool_grids(data->data);
    const bfda::Hyperparams hyper = bfda::default_hyperparams(data->data, grid, fc.eb);
    auto handle = std::make_unique<bfda_fit>();
    handle->chain = bfda::run_chain(data->data, grid, hyper, fc.sampler);
    handle->summary = bfda::summarize(handle->chain, 0.95);
    *out = handle.release();
  });
}

void bfda_fit_free(bfda_fit* fit) { delete fit; }

int64_t bfda_fit_kept(const bfda_fit* fit) { return fit ? fit->chain.kept : -1; }
int64_t bfda_fit_grid_size(const bfda_fit* fit) { return fit ? fit->chain.p : -1; }
int64_t bfda_fit_n_curves(const bfda_fit* fit) { return fit ? fit->chain.n : -1; }

bfda_status bfda_fit_signal_mean(const bfda_fit* fit, double* buffer, size_t len) {
  return guarded([&] {
    if (!fit || !buffer) throw bfda::config_error("null argument");
    const auto& m = fit->summary.signal_mean;
    if (m.size() == 0) throw bfda::config_error("signal draws were not stored");
    if (len < static_cast<size_t>(m.size())) throw bfda::config_error("buffer too small");
    std::memcpy(buffer, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
  });
}

bfda_status bfda_fit_mean_curve(const bfda_fit* fit, double* buffer, size_t len) {
  return guarded([&] {
    if (!fit || !buffer) throw bfda::config_error("null argument");
    const auto& v = fit->summary.mean_curve;
    if (v.size() == 0) throw bfda::config_error("mean draws were not stored");
    if (len < static_cast<size_t>(v.size())) throw bfda::config_error("buffer too small");
    std::memcpy(buffer, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
  });
}

bfda_status bfda_fit_scalar(const bfda_fit* fit, const char* name, double* out) {
  return guarded([&] {
    if (!fit || !name || !out) throw bfda::config_error("null argument");
    const std::string key(name);
    const bfda::ScalarSummary* s = nullptr;
    std::string field;
    if (key.rfind("sigma_eps2.", 0) == 0) {
      s = &fit->summary.sigma_eps2;
      field = key.substr(11);
    } else if (key.rfind("sigma_s2.", 0) == 0) {
      s = &fit->summary.sigma_s2;
      field = key.substr(9);
    } else {
      throw bfda::config_error("unknown scalar '" + key + "'");
    }
    if (field == "mean")
      *out = s->mean;
    else if (field == "lower")
      *out = s->lower;
    else if (field == "upper")
      *out = s->upper;
    else
      throw bfda::config_error("unknown scalar field '" + field + "'");
  });
}

bfda_status bfda_fit_write_summary(const bfda_fit* fit, const char* dir) {
  return guarded([&] {
    if (!fit || !dir) throw bfda::config_error("null argument");
    bfda::write_summary(fit->summary, dir);
  });
}

bfda_status bfda_cmd_simulate(const char* config_path, const char* const* set_kv, size_t n_set,
                              int has_seed, uint64_t seed, double retain, const char* out_dir) {
  return guarded([&] {
    bfda::commands::SimulateOptions opt;
    opt.common.config_path = config_path ? config_path : "";
    opt.common.set_overrides = to_strings(set_kv, n_set);
    if (has_seed) opt.common.seed = seed;
    if (retain >= 0.0) opt.retain = retain;
    opt.common.out_dir = out_dir ? out_dir : ".";
    bfda::commands::cmd_simulate(opt);
  });
}

bfda_status bfda_cmd_fit(const char* data_path, const char* data_format, const char* config_path,
                         const char* const* set_kv, size_t n_set, int has_seed, uint64_t seed,
                         int chains, long iters, long burnin, const char* scale_kernel,
                         int dump_chains, const char* resume_dir, const char* out_dir) {
  return guarded([&] {
    bfda::commands::FitOptions opt;
    opt.data_path = data_path ? data_path : "";
    if (data_format) opt.data_format = data_format;
    opt.common.config_path = config_path ? config_path : "";
    opt.common.set_overrides = to_strings(set_kv, n_set);
    if (has_seed) opt.common.seed = seed;
    opt.chains = chains;
    if (iters >= 0) opt.iters = iters;
    if (burnin >= 0) opt.burnin = burnin;
    if (scale_kernel) opt.scale_kernel = std::string(scale_kernel);
    opt.dump_chains = dump_chains != 0;
    if (resume_dir) opt.resume_dir = resume_dir;
    opt.common.out_dir = out_dir ? out_dir : ".";
    bfda::commands::cmd_fit(opt);
  });
}

bfda_status bfda_cmd_evaluate(const char* const* fit_dirs, size_t n_fits, const char* truth_dir,
                              const char* validation_csv, const char* out_dir) {
  return guarded([&] {
    bfda::commands::EvaluateOptions opt;
    opt.fit_dirs = to_strings(fit_dirs, n_fits);
    opt.truth_dir = truth_dir ? truth_dir : "";
    if (validation_csv) opt.validation_path = validation_csv;
    opt.common.out_dir = out_dir ? out_dir : ".";
    bfda::commands::cmd_evaluate(opt);
  });
}

bfda_status bfda_cmd_diagnose(const char* const* chain_csvs, size_t n_chains,
                              const char* out_dir) {
  return guarded([&] {
    bfda::commands::DiagnoseOptions opt;
    opt.chain_paths = to_strings(chain_csvs, n_chains);
    opt.common.out_dir = out_dir ? out_dir : ".";
    bfda::commands::cmd_diagnose(opt);
  });
}

}  // extern "C"
