#include "bfda/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <thread>

#include <json.hpp>

#include "bfda/io.hpp"
#include "bfda/metrics.hpp"
#include "bfda/posterior.hpp"
#include "bfda/version.hpp"

namespace bfda::commands {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return text.empty() ? json::object() : json::parse(text);
  } catch (const std::exception& e) {
    throw config_error(what + ": JSON parse failure: " + e.what());
  }
}

json load_config_json(const CommonOptions& common) {
  json j = json::object();
  if (!common.config_path.empty())
    j = parse_json_text(io::read_text_file(common.config_path), common.config_path);
  if (!common.set_overrides.empty()) {
    const std::string merged = apply_overrides(j.dump(), common.set_overrides);
    j = parse_json_text(merged, "--set overrides");
  }
  return j;
}

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw config_error(what + ": unknown key '" + it.key() + "'");
}

int worker_count(std::size_t jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("BFDA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || v < 1) throw config_error("BFDA_THREADS must be a positive integer");
    hw = static_cast<unsigned>(v);
  }
  return static_cast<int>(std::min<std::size_t>(hw, jobs));
}

/// Runs fn(i) for i in [0, jobs) on a bounded pool; exceptions resurface.
void parallel_for(std::size_t jobs, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || jobs <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> futs;
  for (int w = 0; w < workers; ++w)
    futs.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs) return;
        fn(i);
      }
    }));
  for (auto& f : futs) f.get();
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& config,
                    const std::vector<std::uint64_t>& seeds,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs, double wall_seconds,
                    const json& dims, int workers) {
  json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["config"] = config;
  m["config_hash"] = io::fnv1a64(config.dump());
  m["seeds"] = seeds;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  m["wall_seconds"] = wall_seconds;
  m["dims"] = dims;
  m["workers"] = workers;
  const fs::path final = fs::path(out_dir) / "manifest.json";
  const fs::path tmp = fs::path(out_dir) / ".manifest.json.tmp";
  io::write_text_file(tmp.string(), m.dump(2) + "\n");
  fs::rename(tmp, final);
}

void write_long_csv(const std::string& path, const std::vector<std::string>& ids,
                    const Vector& grid, const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  out << "curve_id,t,y\n";
  for (Eigen::Index i = 0; i < values.cols(); ++i)
    for (Eigen::Index j = 0; j < grid.size(); ++j)
      out << ids[static_cast<std::size_t>(i)] << ',' << io::format_double(grid[j]) << ','
          << io::format_double(values(j, i)) << '\n';
}

/// Long CSV on a common grid -> (grid, p x n matrix, ids).
struct LongMatrix {
  Vector grid;
  Matrix values;
  std::vector<std::string> ids;
};

LongMatrix read_long_common(const std::string& path) {
  FunctionalDataset data = load_dataset(path, DataFormat::csv_long);
  PooledGrid grid = pool_grids(data);
  if (!grid.common_grid())
    throw data_error("'" + path + "': expected curves on one common grid");
  LongMatrix out;
  out.grid = grid.points;
  out.values = to_pooled_matrix(data, grid, 0.0);
  for (const auto& c : data.curves) out.ids.push_back(c.id);
  return out;
}

}  // namespace

std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides) {
  json j = parse_json_text(json_text, "config");
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw config_error("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    json parsed;
    try {
      parsed = json::parse(val);
    } catch (const std::exception&) {
      parsed = val;  // plain string
    }
    json* node = &j;
    std::size_t start = 0;
    for (;;) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty()) throw config_error("--set key has an empty segment: '" + key + "'");
      if (dot == std::string::npos) {
        (*node)[part] = parsed;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
  return j.dump();
}

SimSpec parse_sim_spec(const std::string& json_text) {
  const json j = parse_json_text(json_text, "simulation config");
  require_keys(j,
               {"kind", "n", "p", "t0", "t1", "mean_amp", "mean_freq", "sigma2", "rho", "nu",
                "sigma_eps", "retain_fraction", "seed"},
               "simulation config");
  SimSpec s;
  try {
    if (j.contains("kind")) s.kind = sim_kind_from_name(j["kind"].get<std::string>());
    if (j.contains("n")) s.n = j["n"].get<Eigen::Index>();
    if (j.contains("p")) s.p = j["p"].get<Eigen::Index>();
    if (j.contains("t0")) s.t0 = j["t0"].get<double>();
    if (j.contains("t1")) s.t1 = j["t1"].get<double>();
    if (j.contains("mean_amp")) s.mean_amp = j["mean_amp"].get<double>();
    if (j.contains("mean_freq")) s.mean_freq = j["mean_freq"].get<double>();
    if (j.contains("sigma2")) s.sigma2 = j["sigma2"].get<double>();
    if (j.contains("rho")) s.rho = j["rho"].get<double>();
    if (j.contains("nu")) s.nu = j["nu"].get<double>();
    if (j.contains("sigma_eps")) s.sigma_eps = j["sigma_eps"].get<double>();
    if (j.contains("retain_fraction")) s.retain_fraction = j["retain_fraction"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw config_error(std::string("simulation config: ") + e.what());
  }
  s.validate();
  return s;
}

FitConfig parse_fit_config(const std::string& json_text) {
  const json j = parse_json_text(json_text, "fit config");
  require_keys(j,
               {"c", "delta", "b_eps", "b_s", "window", "pd_floor", "scale_kernel", "sigma_eps2",
                "sigma_s2", "a_eps", "a_s", "rho", "nu", "mu0", "sampler"},
               "fit config");
  FitConfig f;
  try {
    auto& eb = f.eb;
    if (j.contains("c")) eb.c = j["c"].get<double>();
    if (j.contains("delta")) eb.delta = j["delta"].get<double>();
    if (j.contains("b_eps")) eb.b_eps = j["b_eps"].get<double>();
    if (j.contains("b_s")) eb.b_s = j["b_s"].get<double>();
    if (j.contains("window")) eb.window = j["window"].get<int>();
    if (j.contains("pd_floor")) eb.pd_floor = j["pd_floor"].get<double>();
    if (j.contains("sigma_eps2")) eb.sigma_eps2 = j["sigma_eps2"].get<double>();
    if (j.contains("sigma_s2")) eb.sigma_s2 = j["sigma_s2"].get<double>();
    if (j.contains("a_eps")) eb.a_eps = j["a_eps"].get<double>();
    if (j.contains("a_s")) eb.a_s = j["a_s"].get<double>();
    if (j.contains("rho")) eb.rho = j["rho"].get<double>();
    if (j.contains("nu")) eb.nu = j["nu"].get<double>();
    if (j.contains("mu0")) {
      const auto v = j["mu0"].get<std::vector<double>>();
      Vector m(static_cast<Eigen::Index>(v.size()));
      for (std::size_t k = 0; k < v.size(); ++k) m[static_cast<Eigen::Index>(k)] = v[k];
      eb.mu0 = m;
    }
    if (j.contains("scale_kernel")) {
      const json& sk = j["scale_kernel"];
      require_keys(sk, {"kind", "rho", "nu", "path", "window"}, "scale_kernel");
      if (sk.contains("kind"))
        eb.scale_kernel.kind = scale_kernel_kind_from_name(sk["kind"].get<std::string>());
      if (sk.contains("rho")) eb.scale_kernel.matern.rho = sk["rho"].get<double>();
      if (sk.contains("nu")) eb.scale_kernel.matern.nu = sk["nu"].get<double>();
      if (sk.contains("path")) eb.scale_kernel.path = sk["path"].get<std::string>();
      if (sk.contains("window")) eb.scale_kernel.smoothing_window = sk["window"].get<int>();
      if (eb.scale_kernel.kind == ScaleKernelKind::matern && sk.contains("rho") &&
          sk.contains("nu")) {
        eb.rho = eb.scale_kernel.matern.rho;
        eb.nu = eb.scale_kernel.matern.nu;
      }
      if (eb.scale_kernel.kind == ScaleKernelKind::file && eb.scale_kernel.path.empty())
        throw config_error("scale_kernel.kind=file requires scale_kernel.path");
    }
    if (j.contains("sampler")) {
      const json& sj = j["sampler"];
      require_keys(sj,
                   {"burnin", "samples", "thin", "seed", "degenerate_threshold", "pd_floor",
                    "store", "checkpoint_every", "checkpoint_dir", "force_sparse_path"},
                   "sampler");
      auto& s = f.sampler;
      if (sj.contains("burnin")) s.n_burnin = sj["burnin"].get<long>();
      if (sj.contains("samples")) s.n_samples = sj["samples"].get<long>();
      if (sj.contains("thin")) s.thin = sj["thin"].get<long>();
      if (sj.contains("seed")) s.seed = sj["seed"].get<std::uint64_t>();
      if (sj.contains("degenerate_threshold"))
        s.degenerate_threshold = sj["degenerate_threshold"].get<double>();
      if (sj.contains("pd_floor")) s.pd_floor = sj["pd_floor"].get<double>();
      if (sj.contains("checkpoint_every")) s.checkpoint_every = sj["checkpoint_every"].get<long>();
      if (sj.contains("checkpoint_dir")) s.checkpoint_dir = sj["checkpoint_dir"].get<std::string>();
      if (sj.contains("force_sparse_path")) s.force_sparse_path = sj["force_sparse_path"].get<bool>();
      if (sj.contains("store")) {
        const json& st = sj["store"];
        require_keys(st, {"signals", "mean", "cov_diag", "cov_full_every"}, "store");
        if (st.contains("signals")) s.store.signals = st["signals"].get<bool>();
        if (st.contains("mean")) s.store.mean = st["mean"].get<bool>();
        if (st.contains("cov_diag")) s.store.cov_diag = st["cov_diag"].get<bool>();
        if (st.contains("cov_full_every")) s.store.cov_full_every = st["cov_full_every"].get<int>();
      }
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("fit config: ") + e.what());
  }
  f.sampler.pd_floor = f.eb.pd_floor;
  return f;
}

int cmd_simulate(const SimulateOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  json cfg = load_config_json(opt.common);
  SimSpec spec = parse_sim_spec(cfg.dump());
  if (opt.retain) spec.retain_fraction = *opt.retain;
  if (opt.common.seed) spec.seed = *opt.common.seed;
  spec.validate();

  const SimResult sim = generate(spec);
  fs::create_directories(opt.common.out_dir);
  const fs::path d(opt.common.out_dir);

  save_dataset(sim.data, (d / "data.csv").string(), DataFormat::csv_long);
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < sim.truth.cols(); ++i) {
    std::string num = std::to_string(i + 1);
    const int width = sim.truth.cols() >= 1000 ? 4 : 3;
    ids.push_back(std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))), '0') + num);
  }
  write_long_csv((d / "truth.csv").string(), ids, sim.grid, sim.truth);
  io::write_vector_csv(sim.grid, (d / "grid.csv").string());
  io::write_vector_csv(sim.true_mean, (d / "true_mean.csv").string());
  io::write_matrix_csv(sim.true_cov, (d / "true_cov.csv").string());

  json cfg_final = cfg;
  cfg_final["kind"] = to_string(spec.kind);
  cfg_final["retain_fraction"] = spec.retain_fraction;
  cfg_final["seed"] = spec.seed;
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(opt.common.out_dir, "simulate", cfg_final, {spec.seed},
                 opt.common.config_path.empty() ? std::vector<std::string>{}
                                                : std::vector<std::string>{opt.common.config_path},
                 {(d / "data.csv").string(), (d / "truth.csv").string(),
                  (d / "true_mean.csv").string(), (d / "true_cov.csv").string()},
                 wall, json{{"n", spec.n}, {"p", spec.p}}, 1);
  return 0;
}

int cmd_fit(const FitOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  if (opt.data_path.empty()) throw config_error("fit: --data is required");
  json cfg = load_config_json(opt.common);
  FitConfig fc = parse_fit_config(cfg.dump());
  if (opt.common.seed) fc.sampler.seed = *opt.common.seed;
  if (opt.burnin) fc.sampler.n_burnin = *opt.burnin;
  if (opt.iters) {
    const long samples = *opt.iters - fc.sampler.n_burnin;
    if (samples < 1) throw config_error("fit: --iters must exceed the burn-in");
    fc.sampler.n_samples = samples;
  }
  if (opt.scale_kernel)
    fc.eb.scale_kernel.kind = scale_kernel_kind_from_name(*opt.scale_kernel);
  if (opt.chains < 1) throw config_error("fit: --chains must be >= 1");
  if (!opt.resume_dir.empty() && opt.chains != 1)
    throw config_error("fit: --resume supports a single chain");

  const FunctionalDataset data = load_dataset(opt.data_path, format_from_name(opt.data_format));
  const PooledGrid grid = pool_grids(data);
  const Hyperparams hyper = default_hyperparams(data, grid, fc.eb);

  std::vector<Chain> chains(static_cast<std::size_t>(opt.chains));
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < opt.chains; ++k)
    seeds.push_back(fc.sampler.seed + static_cast<std::uint64_t>(k));
  const int workers = worker_count(chains.size());
  parallel_for(chains.size(), workers, [&](std::size_t k) {
    SamplerConfig sc = fc.sampler;
    sc.seed = seeds[k];
    if (!sc.checkpoint_dir.empty() && opt.chains > 1)
      sc.checkpoint_dir += "_chain" + std::to_string(k);
    if (!opt.resume_dir.empty())
      chains[k] = resume_chain(opt.resume_dir, data, grid, hyper, sc);
    else
      chains[k] = run_chain(data, grid, hyper, sc);
  });

  PosteriorSummary summary = summarize(chains[0], 0.95);
  if (chains.size() >= 2) summary.rhat = diagnose_chains(chains);

  fs::create_directories(opt.common.out_dir);
  const fs::path d(opt.common.out_dir);
  write_summary(summary, (d / "summary").string());
  if (opt.dump_chains) {
    fs::create_directories(d / "chains");
    for (std::size_t k = 0; k < chains.size(); ++k)
      write_scalar_chains(chains[k], (d / "chains" / ("chain_" + std::to_string(k) + ".csv")).string());
  }

  json hj;
  hj["c"] = hyper.c;
  hj["delta"] = hyper.delta;
  hj["a_eps"] = hyper.a_eps;
  hj["b_eps"] = hyper.b_eps;
  hj["a_s"] = hyper.a_s;
  hj["b_s"] = hyper.b_s;
  hj["sigma_eps2_hat"] = hyper.sigma_eps2_hat;
  hj["sigma_s2_hat"] = hyper.sigma_s2_hat;
  hj["scale_kernel"] = to_string(hyper.scale_spec.kind);
  if (hyper.rho_hat) hj["rho_hat"] = *hyper.rho_hat;
  if (hyper.nu_hat) hj["nu_hat"] = *hyper.nu_hat;
  json cfg_final = cfg;
  cfg_final["resolved_hyperparams"] = hj;

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(opt.common.out_dir, "fit", cfg_final, seeds, {opt.data_path},
                 {(d / "summary").string()}, wall,
                 json{{"p", grid.size()},
                      {"n", data.n_curves()},
                      {"kept", chains[0].kept},
                      {"burnin", fc.sampler.n_burnin},
                      {"chains", opt.chains},
                      {"degenerate_curve_sweeps", chains[0].degenerate_curve_sweeps}},
                 workers);
  return 0;
}

namespace {

ReplicateReport evaluate_fit(const std::string& fit_dir, const LongMatrix& truth,
                             const Vector& true_mean, const Matrix& true_cov,
                             const std::string& validation_path) {
  const fs::path sd = fs::path(fit_dir) / "summary";
  if (!fs::exists(sd)) throw data_error("'" + fit_dir + "': no summary directory");
  const Vector grid = io::read_matrix_csv((sd / "grid.csv").string()).col(0);
  if (grid.size() != truth.grid.size() || (grid - truth.grid).cwiseAbs().maxCoeff() > 1e-9)
    throw data_error("'" + fit_dir + "': fit grid does not match the truth grid");

  ReplicateReport rep;
  const Matrix sig_mean = io::read_matrix_csv((sd / "signal_mean.csv").string());
  const Matrix sig_lo = io::read_matrix_csv((sd / "signal_lower.csv").string());
  const Matrix sig_hi = io::read_matrix_csv((sd / "signal_upper.csv").string());
  if (sig_mean.rows() != truth.values.rows() || sig_mean.cols() != truth.values.cols())
    throw data_error("'" + fit_dir + "': summary dimensions do not match the truth");

  double acc = 0.0;
  for (Eigen::Index i = 0; i < sig_mean.cols(); ++i)
    acc += rimse_curve(sig_mean.col(i), truth.values.col(i), grid);
  rep.rimse_signals = acc / static_cast<double>(sig_mean.cols());
  rep.coverage_z = coverage_probability(sig_lo, sig_hi, truth.values);

  const Matrix mc = io::read_matrix_csv((sd / "mean_curve.csv").string());
  rep.rimse_mean = rimse_curve(mc.col(1), true_mean, grid);
  rep.coverage_mu = coverage_probability(mc.col(2), mc.col(3), true_mean);

  const Matrix cov_mean = io::read_matrix_csv((sd / "covariance_mean.csv").string());
  rep.rimse_cov = rimse_surface(cov_mean, true_cov, grid);
  Vector dt = true_cov.diagonal().cwiseSqrt();
  Matrix true_cor = true_cov.array() / (dt * dt.transpose()).array();
  const Matrix cor_mean = io::read_matrix_csv((sd / "correlation_mean.csv").string());
  rep.rimse_cor = rimse_surface(cor_mean, true_cor, grid);

  const fs::path cl = sd / "covariance_lower.csv";
  if (fs::exists(cl)) {
    const Matrix lo = io::read_matrix_csv(cl.string());
    const Matrix hi = io::read_matrix_csv((sd / "covariance_upper.csv").string());
    rep.coverage_sigma = coverage_probability(lo, hi, true_cov);
  }

  if (!validation_path.empty()) {
    const LongMatrix val = read_long_common(validation_path);
    rep.prediction_rmse = predict_validation(sig_mean, grid, val.grid, val.values);
  }
  return rep;
}

void report_row(std::ofstream& out, const std::string& name, const ReplicateReport& r) {
  out << name << ',' << io::format_double(r.rimse_signals) << ',' << io::format_double(r.rimse_mean)
      << ',' << io::format_double(r.rimse_cov) << ',' << io::format_double(r.rimse_cor) << ','
      << io::format_double(r.coverage_z) << ',' << io::format_double(r.coverage_mu) << ','
      << io::format_double(r.coverage_sigma) << ','
      << (r.prediction_rmse ? io::format_double(*r.prediction_rmse) : "") << '\n';
}

}  // namespace

int cmd_evaluate(const EvaluateOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  if (opt.fit_dirs.empty()) throw config_error("evaluate: at least one --fit directory required");
  if (opt.truth_dir.empty()) throw config_error("evaluate: --truth directory required");

  const fs::path td(opt.truth_dir);
  const LongMatrix truth = read_long_common((td / "truth.csv").string());
  const Vector true_mean = io::read_matrix_csv((td / "true_mean.csv").string()).col(0);
  const Matrix true_cov = io::read_matrix_csv((td / "true_cov.csv").string());
  if (true_mean.size() != truth.grid.size() || true_cov.rows() != truth.grid.size())
    throw data_error("truth files disagree on the grid size");

  std::vector<ReplicateReport> reports;
  for (const auto& fd : opt.fit_dirs)
    reports.push_back(evaluate_fit(fd, truth, true_mean, true_cov, opt.validation_path));

  fs::create_directories(opt.common.out_dir);
  const fs::path out_path = fs::path(opt.common.out_dir) / "report.csv";
  std::ofstream out(out_path);
  if (!out) throw data_error("cannot write '" + out_path.string() + "'");
  out << "fit,rimse_z,rimse_mu,rimse_cov,rimse_cor,coverage_z,coverage_mu,coverage_sigma,"
         "prediction_rmse\n";
  for (std::size_t k = 0; k < reports.size(); ++k)
    report_row(out, opt.fit_dirs[k], reports[k]);
  if (reports.size() >= 2) {
    const AggregateReport agg = aggregate_replicates(reports);
    report_row(out, "mean", agg.mean);
    report_row(out, "se", agg.se);
  }
  out.close();

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::vector<std::string> inputs = opt.fit_dirs;
  inputs.push_back(opt.truth_dir);
  write_manifest(opt.common.out_dir, "evaluate", json::object(), {}, inputs, {out_path.string()},
                 wall, json{{"replicates", reports.size()}}, 1);
  return 0;
}

int cmd_diagnose(const DiagnoseOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  if (opt.chain_paths.size() < 2)
    throw config_error("diagnose: need independent chains (got fewer than 2)");
  std::set<std::string> uniq(opt.chain_paths.begin(), opt.chain_paths.end());
  if (uniq.size() != opt.chain_paths.size())
    throw config_error("diagnose: need independent chains (duplicate path given)");

  std::vector<std::map<std::string, Vector>> chains;
  for (const auto& path : opt.chain_paths) chains.push_back(read_scalar_chains(path));

  Eigen::Index minlen = chains.front().begin()->second.size();
  for (const auto& c : chains)
    for (const auto& [k, v] : c) minlen = std::min(minlen, v.size());

  std::ofstream out;
  fs::path out_path;
  fs::create_directories(opt.common.out_dir);
  out_path = fs::path(opt.common.out_dir) / "diagnose.csv";
  out.open(out_path);
  if (!out) throw data_error("cannot write '" + out_path.string() + "'");
  out << "scalar,rhat";
  for (std::size_t k = 0; k < chains.size(); ++k) out << ",mean_chain" << k;
  out << '\n';

  for (const auto& [name, v0] : chains.front()) {
    if (name == "iter") continue;
    std::vector<Vector> seqs;
    bool everywhere = true;
    for (const auto& c : chains) {
      auto it = c.find(name);
      if (it == c.end()) {
        everywhere = false;
        break;
      }
      seqs.push_back(it->second.head(minlen));
    }
    if (!everywhere) continue;
    const double rhat = gelman_rubin(seqs);
    out << name << ',' << io::format_double(rhat);
    for (const auto& s : seqs) out << ',' << io::format_double(s.mean());
    out << '\n';
  }
  out.close();

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(opt.common.out_dir, "diagnose", json::object(), {}, opt.chain_paths,
                 {out_path.string()}, wall, json{{"chains", opt.chain_paths.size()}}, 1);
  return 0;
}

}  // namespace bfda::commands
