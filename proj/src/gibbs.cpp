#include "bfda/gibbs.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <Eigen/Cholesky>
#include <json.hpp>

#include "bfda/io.hpp"
#include "bfda/linalg.hpp"

namespace bfda {

namespace fs = std::filesystem;

void SamplerConfig::validate() const {
  if (n_burnin < 0) throw config_error("n_burnin must be >= 0");
  if (n_samples < 1) throw config_error("n_samples must be >= 1");
  if (thin < 1) throw config_error("thin must be >= 1");
  if (!(degenerate_threshold > 0.0)) throw config_error("degenerate_threshold must be positive");
  if (!(pd_floor > 0.0)) throw config_error("pd_floor must be positive");
  if (checkpoint_every < 0) throw config_error("checkpoint_every must be >= 0");
  if (checkpoint_every > 0 && checkpoint_dir.empty())
    throw config_error("checkpointing enabled but checkpoint_dir unset");
}

Matrix SamplerState::sigma() const {
  Matrix s = Matrix::Zero(sigma_sqrt.rows(), sigma_sqrt.rows());
  s.selfadjointView<Eigen::Lower>().rankUpdate(sigma_sqrt);
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return s;
}

Matrix Chain::signal_mean() const {
  if (signals.size() == 0) throw config_error("signal draws were not stored");
  Matrix out(p, n);
  Vector rowmean = signals.leftCols(kept).rowwise().mean();
  for (Eigen::Index i = 0; i < n; ++i) out.col(i) = rowmean.segment(i * p, p);
  return out;
}

SamplerState init_state(const FunctionalDataset& data, const PooledGrid& grid,
                        const Hyperparams& hyper) {
  const Eigen::Index p = grid.size();
  const Eigen::Index n = data.n_curves();
  hyper.validate(p);
  SamplerState st;
  st.z.resize(p, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    st.z.col(i) = hyper.mu0;
    const auto& o = grid.obs[static_cast<std::size_t>(i)];
    const auto& y = data.curves[static_cast<std::size_t>(i)].y;
    for (std::size_t j = 0; j < o.size(); ++j) st.z(o[j], i) = y[static_cast<Eigen::Index>(j)];
  }
  st.mu = hyper.mu0;
  st.sigma_sqrt = Matrix::Identity(p, p);
  st.prec_sqrt = Matrix::Identity(p, p);
  st.prec = Matrix::Identity(p, p);
  st.sigma_eps2 = hyper.sigma_eps2_hat > 0 ? hyper.sigma_eps2_hat : 1.0;
  st.sigma_s2 = hyper.sigma_s2_hat > 0 ? hyper.sigma_s2_hat : 1.0;
  st.iteration = 0;
  return st;
}

CondGauss missing_conditional(const Matrix& sigma, const Vector& mu, const IndexVec& obs,
                              const IndexVec& mis, const Vector& z_obs) {
  const Eigen::Index no = static_cast<Eigen::Index>(obs.size());
  const Eigen::Index nm = static_cast<Eigen::Index>(mis.size());
  Matrix soo(no, no), smo(nm, no), smm(nm, nm);
  for (Eigen::Index a = 0; a < no; ++a)
    for (Eigen::Index b = 0; b < no; ++b) soo(a, b) = sigma(obs[a], obs[b]);
  for (Eigen::Index a = 0; a < nm; ++a) {
    for (Eigen::Index b = 0; b < no; ++b) smo(a, b) = sigma(mis[a], obs[b]);
    for (Eigen::Index b = 0; b < nm; ++b) smm(a, b) = sigma(mis[a], mis[b]);
  }
  Vector mu_o(no), mu_m(nm);
  for (Eigen::Index a = 0; a < no; ++a) mu_o[a] = mu[obs[a]];
  for (Eigen::Index a = 0; a < nm; ++a) mu_m[a] = mu[mis[a]];
  SymSolver soo_solver(soo);
  const Matrix b = smo * soo_solver.solve(Matrix(Matrix::Identity(no, no)));
  CondGauss out;
  out.mean = mu_m + b * (z_obs - mu_o);
  out.cov = smm - b * smo.transpose();
  return out;
}

CondGauss observed_conditional(const Matrix& sigma, const Vector& mu, double sigma_eps2,
                               const IndexVec& obs, const IndexVec& mis, const Vector& y_obs,
                               const Vector& z_mis, bool coupled) {
  const Eigen::Index no = static_cast<Eigen::Index>(obs.size());
  const Eigen::Index nm = static_cast<Eigen::Index>(mis.size());
  Matrix soo(no, no);
  Vector mu_o(no);
  for (Eigen::Index a = 0; a < no; ++a) {
    mu_o[a] = mu[obs[a]];
    for (Eigen::Index b = 0; b < no; ++b) soo(a, b) = sigma(obs[a], obs[b]);
  }
  SymSolver soo_solver(soo);
  const Matrix soo_inv = soo_solver.solve(Matrix(Matrix::Identity(no, no)));
  Matrix w = soo_inv;
  w.diagonal().array() += 1.0 / sigma_eps2;
  Vector rhs = y_obs / sigma_eps2 + soo_inv * mu_o;
  if (coupled && nm > 0) {
    Matrix smo(nm, no), smm(nm, nm);
    Vector mu_m(nm);
    for (Eigen::Index a = 0; a < nm; ++a) {
      mu_m[a] = mu[mis[a]];
      for (Eigen::Index b = 0; b < no; ++b) smo(a, b) = sigma(mis[a], obs[b]);
      for (Eigen::Index b = 0; b < nm; ++b) smm(a, b) = sigma(mis[a], mis[b]);
    }
    const Matrix b = smo * soo_inv;
    const Matrix v_star = smm - b * smo.transpose();
    SymSolver vs(v_star);
    const Vector u = b * mu_o - mu_m;
    w += b.transpose() * vs.solve(b);
    rhs += b.transpose() * vs.solve(Vector(u + z_mis));
  }
  SymSolver w_solver(w);
  CondGauss out;
  out.mean = w_solver.solve(rhs);
  out.cov = w_solver.solve(Matrix(Matrix::Identity(no, no)));
  return out;
}

double observation_loglik(const FunctionalDataset& data, const PooledGrid& grid, const Matrix& z,
                          double sigma_eps2) {
  double rss = 0.0;
  long nobs = 0;
  for (Eigen::Index i = 0; i < data.n_curves(); ++i) {
    const auto& o = grid.obs[static_cast<std::size_t>(i)];
    const auto& y = data.curves[static_cast<std::size_t>(i)].y;
    for (std::size_t j = 0; j < o.size(); ++j) {
      const double r = y[static_cast<Eigen::Index>(j)] - z(o[j], i);
      rss += r * r;
    }
    nobs += static_cast<long>(o.size());
  }
  return -0.5 * (static_cast<double>(nobs) *
                     std::log(2.0 * std::numbers::pi_v<double> * sigma_eps2) +
                 rss / sigma_eps2);
}

namespace {

struct Streams {
  RngStream params;
  std::vector<RngStream> curves;
};

Streams make_streams(std::uint64_t seed, Eigen::Index n) {
  Streams s;
  s.params = RngStream(seed, 0);
  s.curves.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    s.curves.emplace_back(seed, static_cast<std::uint64_t>(i) + 1);
  return s;
}

class Sampler {
 public:
  Sampler(const FunctionalDataset& data, const PooledGrid& grid, const Hyperparams& hyper,
          const SamplerConfig& config)
      : data_(data), grid_(grid), hyper_(hyper), config_(config) {
    config_.validate();
    p_ = grid.size();
    n_ = data.n_curves();
    common_ = grid.common_grid() && !config.force_sparse_path;
    nobs_total_ = 0;
    for (const auto& o : grid.obs) nobs_total_ += static_cast<long>(o.size());
    y_obs_.reserve(grid.obs.size());
    for (Eigen::Index i = 0; i < n_; ++i)
      y_obs_.push_back(data.curves[static_cast<std::size_t>(i)].y);
  }

  Chain run(SamplerState st, Streams streams, long start_sweep, Chain chain) {
    const long total = config_.n_burnin + config_.n_samples * config_.thin;
    const auto t0 = std::chrono::steady_clock::now();
    for (long sweep = start_sweep; sweep < total; ++sweep) {
      try {
        advance(st, streams);
      } catch (const error& e) {
        const std::string snap = abort_snapshot(st, streams, chain, sweep);
        throw numeric_error("sweep " + std::to_string(sweep) + ": " + e.what() +
                            " (state snapshot: " + snap + ")");
      }
      st.iteration = sweep + 1;
      if (sweep >= config_.n_burnin && (sweep - config_.n_burnin) % config_.thin == 0)
        record(chain, st);
      if (config_.checkpoint_every > 0 && (sweep + 1) % config_.checkpoint_every == 0 &&
          sweep + 1 < total)
        write_checkpoint(config_.checkpoint_dir, st, streams, chain, sweep + 1);
    }
    chain.wall_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    chain.degenerate_curve_sweeps = degenerate_curve_sweeps_;
    chain.q_repairs = q_repairs_;
    return chain;
  }

  Chain empty_chain() const {
    Chain c;
    c.grid = grid_.points;
    for (const auto& cur : data_.curves) c.curve_ids.push_back(cur.id);
    c.n = n_;
    c.p = p_;
    c.kept = 0;
    c.hyper = hyper_;
    c.config = config_;
    const long keep = config_.n_samples;
    if (config_.store.signals) c.signals.resize(p_ * n_, keep);
    if (config_.store.mean) c.mean.resize(p_, keep);
    if (config_.store.cov_diag) c.cov_diag.resize(p_, keep);
    c.cov_full_stride = config_.store.cov_full_every;
    c.sigma_eps2.resize(keep);
    c.sigma_s2.resize(keep);
    c.loglik.resize(keep);
    return c;
  }

  void write_checkpoint(const std::string& dir, const SamplerState& st, const Streams& streams,
                        const Chain& chain, long next_sweep) const;
  static void read_checkpoint(const std::string& dir, SamplerState& st, Streams& streams,
                              Chain& chain, long& next_sweep);

 private:
  void advance(SamplerState& st, Streams& streams) {
    step1_signals(st, streams);
    last_rss_ = residual_ss(st);
    if (config_.update_noise) {
      const double shape = hyper_.a_eps + 0.5 * static_cast<double>(nobs_total_);
      const double scale = hyper_.b_eps + 0.5 * last_rss_;
      st.sigma_eps2 = streams.params.inverse_gamma(shape, scale);
    }
    if (config_.update_mean) step3_mean(st, streams);
    if (config_.update_covariance) step4_covariance(st, streams);
    if (config_.update_sigma_s) {
      const double shape =
          hyper_.a_s + 0.5 * (hyper_.delta + static_cast<double>(p_) - 1.0) * static_cast<double>(p_);
      const double trace_ap = (hyper_.scale_kernel.array() * st.prec.array()).sum();
      st.sigma_s2 = streams.params.gamma(shape, hyper_.b_s + 0.5 * trace_ap);
    }
  }

  void step1_signals(SamplerState& st, Streams& streams) {
    if (!config_.update_signals) return;
    Vector pmu = st.prec.selfadjointView<Eigen::Lower>() * st.mu;
    if (common_) {
      Matrix w = st.prec;
      w.diagonal().array() += 1.0 / st.sigma_eps2;
      Eigen::LLT<Matrix> llt(w);
      if (llt.info() != Eigen::Success) {
        w = nearest_pd(w, config_.pd_floor);
        llt.compute(w);
        if (llt.info() != Eigen::Success)
          throw numeric_error("step 1: signal precision not factorizable");
      }
      Vector z(p_);
      for (Eigen::Index i = 0; i < n_; ++i) {
        Vector rhs = y_obs_[static_cast<std::size_t>(i)] / st.sigma_eps2 + pmu;
        streams.curves[static_cast<std::size_t>(i)].fill_normal(z);
        st.z.col(i) = llt.solve(rhs) + llt.matrixU().solve(z);
      }
      return;
    }
    sparse_step1(st, streams, pmu);
  }

  void sparse_step1(SamplerState& st, Streams& streams, const Vector& pmu) {
    // Degeneracy screen: every curve is safe when lambda_min(Sigma) clears
    // the threshold; otherwise curves are checked individually.
    bool any_missing = false;
    for (const auto& m : grid_.mis)
      if (!m.empty()) {
        any_missing = true;
        break;
      }
    double thr_abs = 0.0;
    bool global_safe = true;
    Matrix sigma_explicit;
    if (any_missing) {
      const double lam_max_sigma = power_lambda_max_factor(st.sigma_sqrt, 40);
      thr_abs = config_.degenerate_threshold * lam_max_sigma;
      const double lam_max_prec = power_lambda_max(st.prec, 40);
      global_safe = lam_max_prec > 0.0 && (1.0 / lam_max_prec) >= thr_abs;
    }

    // Shared factorization for curves with no missing points.
    Eigen::LLT<Matrix> shared_llt;
    bool shared_ready = false;

    for (Eigen::Index i = 0; i < n_; ++i) {
      const auto& obs = grid_.obs[static_cast<std::size_t>(i)];
      const auto& mis = grid_.mis[static_cast<std::size_t>(i)];
      auto& rng = streams.curves[static_cast<std::size_t>(i)];
      const Eigen::Index no = static_cast<Eigen::Index>(obs.size());
      const Eigen::Index nm = static_cast<Eigen::Index>(mis.size());

      if (nm == 0) {
        if (!shared_ready) {
          Matrix w = st.prec;
          w.diagonal().array() += 1.0 / st.sigma_eps2;
          shared_llt.compute(w);
          if (shared_llt.info() != Eigen::Success) {
            w = nearest_pd(w, config_.pd_floor);
            shared_llt.compute(w);
            if (shared_llt.info() != Eigen::Success)
              throw numeric_error("step 1: signal precision not factorizable");
          }
          shared_ready = true;
        }
        Vector rhs = y_obs_[static_cast<std::size_t>(i)] / st.sigma_eps2 + pmu;
        Vector z(p_);
        rng.fill_normal(z);
        st.z.col(i) = shared_llt.solve(rhs) + shared_llt.matrixU().solve(z);
        continue;
      }

      Matrix pmm(nm, nm);
      for (Eigen::Index a = 0; a < nm; ++a)
        for (Eigen::Index b = 0; b < nm; ++b) pmm(a, b) = st.prec(mis[a], mis[b]);

      bool degenerate = false;
      if (!global_safe) {
        const double maxdiag = pmm.diagonal().maxCoeff();
        if (1.0 / maxdiag < thr_abs) {
          degenerate = true;
        } else {
          const double lam = power_lambda_max(pmm, 40);
          degenerate = lam > 0.0 && (1.0 / lam) < thr_abs;
        }
      }

      Vector mu_o(no), mu_m(nm), dz_o(no);
      for (Eigen::Index a = 0; a < no; ++a) {
        mu_o[a] = st.mu[obs[a]];
        dz_o[a] = st.z(obs[a], i) - mu_o[a];
      }
      for (Eigen::Index a = 0; a < nm; ++a) mu_m[a] = st.mu[mis[a]];

      Matrix pmo(nm, no);
      for (Eigen::Index a = 0; a < nm; ++a)
        for (Eigen::Index b = 0; b < no; ++b) pmo(a, b) = st.prec(mis[a], obs[b]);

      if (degenerate) {
        ++degenerate_curve_sweeps_;
        // Conditional mean for the missing block, no noise.
        Eigen::LLT<Matrix> lltm(pmm);
        Vector zm;
        if (lltm.info() == Eigen::Success) {
          zm = mu_m - lltm.solve(pmo * dz_o);
        } else {
          SymSolver s(pmm, config_.pd_floor);
          zm = mu_m - s.solve(Vector(pmo * dz_o));
        }
        for (Eigen::Index a = 0; a < nm; ++a) st.z(mis[a], i) = zm[a];
        // Coupling dropped: common-grid update restricted to the observed set,
        // which needs the submatrix inverse of Sigma itself.
        if (sigma_explicit.size() == 0) sigma_explicit = st.sigma();
        Matrix soo(no, no);
        for (Eigen::Index a = 0; a < no; ++a)
          for (Eigen::Index b = 0; b < no; ++b) soo(a, b) = sigma_explicit(obs[a], obs[b]);
        SymSolver soo_solver(soo, config_.pd_floor);
        Matrix soo_inv = soo_solver.solve(Matrix(Matrix::Identity(no, no)));
        soo_inv = (0.5 * (soo_inv + soo_inv.transpose())).eval();
        Matrix w = soo_inv;
        w.diagonal().array() += 1.0 / st.sigma_eps2;
        Eigen::LLT<Matrix> lltw(w);
        if (lltw.info() != Eigen::Success) {
          w = nearest_pd(w, config_.pd_floor);
          lltw.compute(w);
          if (lltw.info() != Eigen::Success)
            throw numeric_error("step 1 (degenerate path): W not factorizable");
        }
        Vector rhs = y_obs_[static_cast<std::size_t>(i)] / st.sigma_eps2 + soo_inv * mu_o;
        Vector z(no);
        rng.fill_normal(z);
        Vector zo = lltw.solve(rhs) + lltw.matrixU().solve(z);
        for (Eigen::Index a = 0; a < no; ++a) st.z(obs[a], i) = zo[a];
        continue;
      }

      // Missing block draw from N(mu*, V*) with V* = Pmm^{-1}.
      Eigen::LLT<Matrix> lltm(pmm);
      if (lltm.info() != Eigen::Success)
        throw numeric_error("step 1: missing-block precision not factorizable");
      Vector zm_noise(nm);
      rng.fill_normal(zm_noise);
      Vector zm = mu_m - lltm.solve(pmo * dz_o) + lltm.matrixU().solve(zm_noise);
      for (Eigen::Index a = 0; a < nm; ++a) st.z(mis[a], i) = zm[a];

      // Observed block; the coupled precision is exactly P restricted to obs.
      Matrix w(no, no);
      for (Eigen::Index a = 0; a < no; ++a)
        for (Eigen::Index b = 0; b < no; ++b) w(a, b) = st.prec(obs[a], obs[b]);
      Vector rhs = y_obs_[static_cast<std::size_t>(i)] / st.sigma_eps2;
      rhs.noalias() += w.selfadjointView<Eigen::Lower>() * mu_o;
      rhs.noalias() += pmo.transpose() * (mu_m - zm);
      w.diagonal().array() += 1.0 / st.sigma_eps2;
      Eigen::LLT<Matrix> lltw(w);
      if (lltw.info() != Eigen::Success) {
        w = nearest_pd(w, config_.pd_floor);
        lltw.compute(w);
        if (lltw.info() != Eigen::Success)
          throw numeric_error("step 1: observed-block precision not factorizable");
      }
      Vector z(no);
      rng.fill_normal(z);
      Vector zo = lltw.solve(rhs) + lltw.matrixU().solve(z);
      for (Eigen::Index a = 0; a < no; ++a) st.z(obs[a], i) = zo[a];
    }
  }

  double residual_ss(const SamplerState& st) const {
    double rss = 0.0;
    for (Eigen::Index i = 0; i < n_; ++i) {
      const auto& o = grid_.obs[static_cast<std::size_t>(i)];
      const Vector& y = y_obs_[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < o.size(); ++j) {
        const double r = y[static_cast<Eigen::Index>(j)] - st.z(o[j], i);
        rss += r * r;
      }
    }
    return rss;
  }

  void step3_mean(SamplerState& st, Streams& streams) {
    const double nc = static_cast<double>(n_) + hyper_.c;
    Vector mean = (st.z.rowwise().sum() + hyper_.c * hyper_.mu0) / nc;
    Vector z(p_);
    streams.params.fill_normal(z);
    st.mu = mean + st.sigma_sqrt * z / std::sqrt(nc);
  }

  void step4_covariance(SamplerState& st, Streams& streams) {
    Matrix zc = st.z.colwise() - st.mu;
    Matrix q = Matrix::Zero(p_, p_);
    q.selfadjointView<Eigen::Lower>().rankUpdate(zc);
    Vector dm = st.mu - hyper_.mu0;
    q.selfadjointView<Eigen::Lower>().rankUpdate(dm, hyper_.c);
    q.triangularView<Eigen::StrictlyUpper>() = q.transpose();
    q += st.sigma_s2 * hyper_.scale_kernel;

    Eigen::LLT<Matrix> llt(q);
    if (llt.info() != Eigen::Success) {
      ++q_repairs_;
      q = nearest_pd(q, config_.pd_floor);
      llt.compute(q);
      if (llt.info() != Eigen::Success)
        throw numeric_error("step 4: scale matrix not factorizable after repair");
    }
    const double delta_post = static_cast<double>(n_) + hyper_.delta + 1.0;
    IwFactors f = sample_iw_dawid_factors(delta_post, llt, streams.params);
    st.sigma_sqrt = std::move(f.sigma_sqrt);
    st.prec_sqrt = std::move(f.prec_sqrt);
    st.prec.setZero();
    st.prec.selfadjointView<Eigen::Lower>().rankUpdate(st.prec_sqrt);
    st.prec.triangularView<Eigen::StrictlyUpper>() = st.prec.transpose();
  }

  void record(Chain& chain, const SamplerState& st) {
    const long k = chain.kept;
    if (config_.store.signals)
      chain.signals.col(k) = Eigen::Map<const Vector>(st.z.data(), p_ * n_);
    if (config_.store.mean) chain.mean.col(k) = st.mu;
    if (config_.store.cov_diag) chain.cov_diag.col(k) = st.sigma_sqrt.rowwise().squaredNorm();
    if (config_.store.cov_full_every > 0 && k % config_.store.cov_full_every == 0)
      chain.cov_full.push_back(st.sigma());
    chain.sigma_eps2[k] = st.sigma_eps2;
    chain.sigma_s2[k] = st.sigma_s2;
    chain.loglik[k] =
        -0.5 * (static_cast<double>(nobs_total_) *
                    std::log(2.0 * std::numbers::pi_v<double> * st.sigma_eps2) +
                last_rss_ / st.sigma_eps2);
    ++chain.kept;
  }

  std::string abort_snapshot(const SamplerState& st, const Streams& streams, const Chain& chain,
                             long sweep) const {
    const auto tag = std::chrono::steady_clock::now().time_since_epoch().count();
    fs::path dir = config_.checkpoint_dir.empty()
                       ? fs::temp_directory_path() / ("bfda_abort_" + std::to_string(tag))
                       : fs::path(config_.checkpoint_dir) / "abort";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return "<unavailable>";
    try {
      write_checkpoint(dir.string(), st, streams, chain, sweep);
    } catch (...) {
      return "<unavailable>";
    }
    return dir.string();
  }

  const FunctionalDataset& data_;
  const PooledGrid& grid_;
  Hyperparams hyper_;
  SamplerConfig config_;
  Eigen::Index p_ = 0, n_ = 0;
  bool common_ = false;
  long nobs_total_ = 0;
  std::vector<Vector> y_obs_;
  double last_rss_ = 0.0;
  long degenerate_curve_sweeps_ = 0;
  long q_repairs_ = 0;
};

void write_matrix_bin(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write '" + path + "'");
  const std::int64_t r = m.rows(), c = m.cols();
  out.write(reinterpret_cast<const char*>(&r), sizeof(r));
  out.write(reinterpret_cast<const char*>(&c), sizeof(c));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}

Matrix read_matrix_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path + "'");
  std::int64_t r = 0, c = 0;
  in.read(reinterpret_cast<char*>(&r), sizeof(r));
  in.read(reinterpret_cast<char*>(&c), sizeof(c));
  if (!in || r < 0 || c < 0) throw data_error("'" + path + "': bad matrix header");
  Matrix m(r, c);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  if (!in) throw data_error("'" + path + "': truncated matrix payload");
  return m;
}

void Sampler::write_checkpoint(const std::string& dir, const SamplerState& st,
                               const Streams& streams, const Chain& chain,
                               long next_sweep) const {
  fs::create_directories(dir);
  nlohmann::json j;
  j["next_sweep"] = next_sweep;
  j["iteration"] = st.iteration;
  j["kept"] = chain.kept;
  j["sigma_eps2"] = st.sigma_eps2;
  j["sigma_s2"] = st.sigma_s2;
  j["p"] = st.z.rows();
  j["n"] = st.z.cols();
  j["rng_params"] = streams.params.serialize_state();
  std::vector<std::string> cs;
  for (const auto& s : streams.curves) cs.push_back(s.serialize_state());
  j["rng_curves"] = cs;
  j["cov_full_count"] = chain.cov_full.size();
  io::write_text_file((fs::path(dir) / "state.json").string(), j.dump(2));

  const fs::path d(dir);
  write_matrix_bin(st.z, (d / "z.bin").string());
  write_matrix_bin(st.mu, (d / "mu.bin").string());
  write_matrix_bin(st.sigma_sqrt, (d / "sigma_sqrt.bin").string());
  write_matrix_bin(st.prec_sqrt, (d / "prec_sqrt.bin").string());
  const long k = chain.kept;
  if (chain.signals.size() > 0) write_matrix_bin(chain.signals.leftCols(k), (d / "chain_signals.bin").string());
  if (chain.mean.size() > 0) write_matrix_bin(chain.mean.leftCols(k), (d / "chain_mean.bin").string());
  if (chain.cov_diag.size() > 0)
    write_matrix_bin(chain.cov_diag.leftCols(k), (d / "chain_cov_diag.bin").string());
  write_matrix_bin(chain.sigma_eps2.head(k), (d / "chain_sigma_eps2.bin").string());
  write_matrix_bin(chain.sigma_s2.head(k), (d / "chain_sigma_s2.bin").string());
  write_matrix_bin(chain.loglik.head(k), (d / "chain_loglik.bin").string());
  if (!chain.cov_full.empty()) {
    Matrix flat(chain.p * chain.p, static_cast<Eigen::Index>(chain.cov_full.size()));
    for (std::size_t i = 0; i < chain.cov_full.size(); ++i)
      flat.col(static_cast<Eigen::Index>(i)) =
          Eigen::Map<const Vector>(chain.cov_full[i].data(), chain.p * chain.p);
    write_matrix_bin(flat, (d / "chain_cov_full.bin").string());
  }
}

void Sampler::read_checkpoint(const std::string& dir, SamplerState& st, Streams& streams,
                              Chain& chain, long& next_sweep) {
  const fs::path d(dir);
  nlohmann::json j = nlohmann::json::parse(io::read_text_file((d / "state.json").string()));
  next_sweep = j.at("next_sweep").get<long>();
  st.iteration = j.at("iteration").get<long>();
  st.sigma_eps2 = j.at("sigma_eps2").get<double>();
  st.sigma_s2 = j.at("sigma_s2").get<double>();
  st.z = read_matrix_bin((d / "z.bin").string());
  st.mu = read_matrix_bin((d / "mu.bin").string());
  st.sigma_sqrt = read_matrix_bin((d / "sigma_sqrt.bin").string());
  st.prec_sqrt = read_matrix_bin((d / "prec_sqrt.bin").string());
  st.prec.resize(st.prec_sqrt.rows(), st.prec_sqrt.rows());
  st.prec.setZero();
  st.prec.selfadjointView<Eigen::Lower>().rankUpdate(st.prec_sqrt);
  st.prec.triangularView<Eigen::StrictlyUpper>() = st.prec.transpose();

  streams.params.restore_state(j.at("rng_params").get<std::string>());
  const auto cs = j.at("rng_curves").get<std::vector<std::string>>();
  if (cs.size() != streams.curves.size()) throw data_error("checkpoint stream count mismatch");
  for (std::size_t i = 0; i < cs.size(); ++i) streams.curves[i].restore_state(cs[i]);

  const long k = j.at("kept").get<long>();
  chain.kept = k;
  if (chain.signals.size() > 0 && k > 0)
    chain.signals.leftCols(k) = read_matrix_bin((d / "chain_signals.bin").string());
  if (chain.mean.size() > 0 && k > 0)
    chain.mean.leftCols(k) = read_matrix_bin((d / "chain_mean.bin").string());
  if (chain.cov_diag.size() > 0 && k > 0)
    chain.cov_diag.leftCols(k) = read_matrix_bin((d / "chain_cov_diag.bin").string());
  if (k > 0) {
    chain.sigma_eps2.head(k) = read_matrix_bin((d / "chain_sigma_eps2.bin").string());
    chain.sigma_s2.head(k) = read_matrix_bin((d / "chain_sigma_s2.bin").string());
    chain.loglik.head(k) = read_matrix_bin((d / "chain_loglik.bin").string());
  }
  const std::size_t nfull = j.at("cov_full_count").get<std::size_t>();
  chain.cov_full.clear();
  if (nfull > 0) {
    Matrix flat = read_matrix_bin((d / "chain_cov_full.bin").string());
    for (std::size_t i = 0; i < nfull; ++i) {
      Matrix m = Eigen::Map<const Matrix>(flat.col(static_cast<Eigen::Index>(i)).data(), chain.p,
                                          chain.p);
      chain.cov_full.push_back(std::move(m));
    }
  }
}

}  // namespace

Chain run_chain(const FunctionalDataset& data, const PooledGrid& grid, const Hyperparams& hyper,
                const SamplerConfig& config) {
  Sampler sampler(data, grid, hyper, config);
  SamplerState st = init_state(data, grid, hyper);
  Streams streams = make_streams(config.seed, data.n_curves());
  return sampler.run(std::move(st), std::move(streams), 0, sampler.empty_chain());
}

Chain run_chain_from(const FunctionalDataset& data, const PooledGrid& grid,
                     const Hyperparams& hyper, const SamplerConfig& config,
                     const SamplerState& initial) {
  Sampler sampler(data, grid, hyper, config);
  if (initial.z.rows() != grid.size() || initial.z.cols() != data.n_curves())
    throw config_error("run_chain_from: initial state dimensions do not match the data");
  Streams streams = make_streams(config.seed, data.n_curves());
  return sampler.run(initial, std::move(streams), 0, sampler.empty_chain());
}

Chain resume_chain(const std::string& checkpoint_dir, const FunctionalDataset& data,
                   const PooledGrid& grid, const Hyperparams& hyper,
                   const SamplerConfig& config) {
  Sampler sampler(data, grid, hyper, config);
  SamplerState st = init_state(data, grid, hyper);
  Streams streams = make_streams(config.seed, data.n_curves());
  Chain chain = sampler.empty_chain();
  long next_sweep = 0;
  Sampler::read_checkpoint(checkpoint_dir, st, streams, chain, next_sweep);
  return sampler.run(std::move(st), std::move(streams), next_sweep, std::move(chain));
}

}  // namespace bfda
