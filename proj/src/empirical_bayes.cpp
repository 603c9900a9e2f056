#include "bfda/empirical_bayes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "bfda/randmat.hpp"

namespace bfda {

void Hyperparams::validate(Eigen::Index p) const {
  if (!(c > 0.0)) throw config_error("hyperparams: c must be positive");
  if (!(delta >= 3.0)) throw config_error("hyperparams: delta must be >= 3");
  if (!(a_eps > 0.0 && b_eps > 0.0 && a_s > 0.0 && b_s > 0.0))
    throw config_error("hyperparams: prior shapes and scales must be positive");
  if (mu0.size() != p) throw config_error("hyperparams: mu0 length mismatch");
  if (scale_kernel.rows() != p || scale_kernel.cols() != p)
    throw config_error("hyperparams: scale kernel dimension mismatch");
  if (nu_hat && *nu_hat < 2.5) throw config_error("hyperparams: fitted nu below 2.5");
}

double estimate_noise_variance(const FunctionalDataset& data) {
  double num = 0.0;
  long den = 0;
  for (const auto& c : data.curves) {
    for (Eigen::Index j = 0; j + 1 < c.y.size(); ++j) {
      const double d = c.y[j + 1] - c.y[j];
      num += d * d;
    }
    den += static_cast<long>(c.y.size()) - 1;
  }
  if (den <= 0) throw data_error("noise estimator needs a curve with at least 2 points");
  return num / (2.0 * static_cast<double>(den));
}

Vector estimate_prior_mean(const FunctionalDataset& data, const PooledGrid& grid, int window) {
  const Eigen::Index p = grid.size();
  Vector sum = Vector::Zero(p);
  Vector count = Vector::Zero(p);
  for (Eigen::Index i = 0; i < data.n_curves(); ++i) {
    const auto& o = grid.obs[static_cast<std::size_t>(i)];
    const auto& y = data.curves[static_cast<std::size_t>(i)].y;
    for (std::size_t j = 0; j < o.size(); ++j) {
      sum[o[j]] += y[static_cast<Eigen::Index>(j)];
      count[o[j]] += 1.0;
    }
  }
  Vector mean(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    if (count[j] <= 0.0)
      throw data_error("pooled point observed by no curve");  // impossible by construction
    mean[j] = sum[j] / count[j];
  }
  return smooth_moving_average(mean, window);
}

Vector pointwise_variance(const FunctionalDataset& data, const PooledGrid& grid) {
  const Eigen::Index p = grid.size();
  Vector count = Vector::Zero(p), mean = Vector::Zero(p), m2 = Vector::Zero(p);
  for (Eigen::Index i = 0; i < data.n_curves(); ++i) {
    const auto& o = grid.obs[static_cast<std::size_t>(i)];
    const auto& y = data.curves[static_cast<std::size_t>(i)].y;
    for (std::size_t j = 0; j < o.size(); ++j) {
      count[o[j]] += 1.0;
      mean[o[j]] += y[static_cast<Eigen::Index>(j)];
    }
  }
  for (Eigen::Index j = 0; j < p; ++j)
    if (count[j] > 0.0) mean[j] /= count[j];
  for (Eigen::Index i = 0; i < data.n_curves(); ++i) {
    const auto& o = grid.obs[static_cast<std::size_t>(i)];
    const auto& y = data.curves[static_cast<std::size_t>(i)].y;
    for (std::size_t j = 0; j < o.size(); ++j) {
      const double d = y[static_cast<Eigen::Index>(j)] - mean[o[j]];
      m2[o[j]] += d * d;
    }
  }
  Vector var = Vector::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j)
    if (count[j] >= 2.0) var[j] = m2[j] / (count[j] - 1.0);
  return var;
}

Matrix empirical_correlation(const FunctionalDataset& data, const PooledGrid& grid,
                             double noise_var, double pd_floor) {
  Matrix cov = pairwise_covariance(data, grid);
  const Eigen::Index p = cov.rows();
  Vector diag = cov.diagonal();
  for (Eigen::Index j = 0; j < p; ++j)
    diag[j] = std::max(diag[j] - noise_var, 1e-12);
  cov.diagonal() = diag;
  Vector d = diag.cwiseSqrt();
  Matrix cor = cov.array() / (d * d.transpose()).array();
  cor = nearest_pd(cor, pd_floor);
  return cor;
}

namespace {

double matern_mse(const Matrix& emp_cor, const Matrix& dist, double rho, double nu) {
  const Eigen::Index p = emp_cor.rows();
  double acc = 0.0;
  long cnt = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = j + 1; k < p; ++k) {
      const double e = matern_cor(dist(j, k), rho, nu) - emp_cor(j, k);
      acc += e * e;
      ++cnt;
    }
  }
  if (cnt == 0) throw config_error("matern fit needs at least two grid points");
  return acc / static_cast<double>(cnt);
}

constexpr double kNuMin = 2.5;
constexpr double kNuMax = 12.0;  // refinement cap; the coarse grid tops out at 10

}  // namespace

MaternFit fit_matern_params(const Matrix& emp_cor, const Matrix& dist) {
  if (emp_cor.rows() != emp_cor.cols() || dist.rows() != emp_cor.rows() ||
      dist.cols() != emp_cor.cols())
    throw config_error("fit_matern_params: shape mismatch");

  double range = dist.maxCoeff();
  if (!(range > 0.0)) throw config_error("fit_matern_params: degenerate distance matrix");

  const double rho_lo = 0.01 * range, rho_hi = 10.0 * range;
  std::vector<double> rho_grid(60);
  for (int i = 0; i < 60; ++i)
    rho_grid[static_cast<std::size_t>(i)] =
        std::exp(std::log(rho_lo) + (std::log(rho_hi) - std::log(rho_lo)) * i / 59.0);

  double best_obj = std::numeric_limits<double>::infinity();
  double best_rho = rho_grid[0], best_nu = kNuMin;
  for (double rho : rho_grid) {
    for (double nu = 2.5; nu <= 10.0 + 1e-9; nu += 0.5) {
      const double obj = matern_mse(emp_cor, dist, rho, nu);
      if (obj < best_obj) {
        best_obj = obj;
        best_rho = rho;
        best_nu = nu;
      }
    }
  }
  if (!std::isfinite(best_obj))
    throw numeric_error("fit_matern_params: objective not finite on the search grid");

  // Nelder-Mead on (log rho, nu), clamped into the search box.
  auto eval = [&](double lr, double nu) {
    const double rho = std::exp(std::clamp(lr, std::log(rho_lo), std::log(rho_hi)));
    const double nuc = std::clamp(nu, kNuMin, kNuMax);
    return matern_mse(emp_cor, dist, rho, nuc);
  };
  struct Pt {
    double lr, nu, f;
  };
  std::array<Pt, 3> s{Pt{std::log(best_rho), best_nu, best_obj},
                      Pt{std::log(best_rho) + 0.15, best_nu, 0.0},
                      Pt{std::log(best_rho), best_nu + 0.25, 0.0}};
  s[1].f = eval(s[1].lr, s[1].nu);
  s[2].f = eval(s[2].lr, s[2].nu);
  for (int it = 0; it < 200; ++it) {
    std::sort(s.begin(), s.end(), [](const Pt& a, const Pt& b) { return a.f < b.f; });
    const double clr = 0.5 * (s[0].lr + s[1].lr), cnu = 0.5 * (s[0].nu + s[1].nu);
    Pt refl{clr + (clr - s[2].lr), cnu + (cnu - s[2].nu), 0.0};
    refl.f = eval(refl.lr, refl.nu);
    if (refl.f < s[0].f) {
      Pt exp_{clr + 2.0 * (clr - s[2].lr), cnu + 2.0 * (cnu - s[2].nu), 0.0};
      exp_.f = eval(exp_.lr, exp_.nu);
      s[2] = exp_.f < refl.f ? exp_ : refl;
    } else if (refl.f < s[1].f) {
      s[2] = refl;
    } else {
      Pt con{clr + 0.5 * (s[2].lr - clr), cnu + 0.5 * (s[2].nu - cnu), 0.0};
      con.f = eval(con.lr, con.nu);
      if (con.f < s[2].f) {
        s[2] = con;
      } else {
        for (int k = 1; k < 3; ++k) {
          s[k].lr = 0.5 * (s[k].lr + s[0].lr);
          s[k].nu = 0.5 * (s[k].nu + s[0].nu);
          s[k].f = eval(s[k].lr, s[k].nu);
        }
      }
    }
  }
  std::sort(s.begin(), s.end(), [](const Pt& a, const Pt& b) { return a.f < b.f; });

  MaternFit fit;
  if (s[0].f < best_obj) {
    fit.rho = std::exp(std::clamp(s[0].lr, std::log(rho_lo), std::log(rho_hi)));
    fit.nu = std::clamp(s[0].nu, kNuMin, kNuMax);
    fit.objective = s[0].f;
  } else {
    fit.rho = best_rho;
    fit.nu = best_nu;
    fit.objective = best_obj;
  }
  if (!std::isfinite(fit.objective))
    throw numeric_error("fit_matern_params: refinement produced non-finite objective");
  fit.at_lower_bound = fit.rho <= rho_lo * (1.0 + 1e-9);
  if (fit.at_lower_bound)
    log_warning("fit_matern_params: rho at the lower search bound; correlation nearly diagonal");
  return fit;
}

double estimate_sigma_s2(double trace_cov_y, double noise_var, double trace_A, Eigen::Index p,
                         double delta) {
  if (!(delta > 2.0)) throw config_error("estimate_sigma_s2: delta must exceed 2");
  if (!(trace_cov_y > 0.0) || !(trace_A > 0.0))
    throw config_error("estimate_sigma_s2: traces must be positive");
  double num = trace_cov_y - static_cast<double>(p) * noise_var;
  if (num <= 0.0) {
    log_warning("estimate_sigma_s2: noise dominates signal; clamping numerator");
    num = 1e-6 * trace_cov_y;
  }
  return num / (trace_A / (delta - 2.0));
}

std::pair<double, double> derive_hyperpriors(double noise_var, double sigma_s2_hat, double b_eps,
                                             double b_s) {
  if (!(noise_var > 0.0 && sigma_s2_hat > 0.0 && b_eps > 0.0 && b_s > 0.0))
    throw config_error("derive_hyperpriors: inputs must be positive");
  return {b_eps / noise_var, b_s * sigma_s2_hat};
}

Hyperparams default_hyperparams(const FunctionalDataset& data, const PooledGrid& grid,
                                const EbConfig& config) {
  const Eigen::Index p = grid.size();
  Hyperparams h;
  h.c = config.c;
  h.delta = config.delta;
  h.b_eps = config.b_eps;
  h.b_s = config.b_s;
  h.window = config.window;
  h.pd_floor = config.pd_floor;
  h.scale_spec = config.scale_kernel;
  h.scale_spec.pd_floor = config.pd_floor;

  h.sigma_eps2_hat = config.sigma_eps2 ? *config.sigma_eps2 : estimate_noise_variance(data);
  h.mu0 = config.mu0 ? *config.mu0 : estimate_prior_mean(data, grid, config.window);
  if (h.mu0.size() != p) throw config_error("mu0 override has wrong length");

  if (h.scale_spec.kind == ScaleKernelKind::matern) {
    double rho, nu;
    if (config.rho && config.nu) {
      rho = *config.rho;
      nu = *config.nu;
    } else {
      Matrix cor = empirical_correlation(data, grid, h.sigma_eps2_hat, config.pd_floor);
      Matrix dist(p, p);
      for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = 0; b < p; ++b) dist(a, b) = std::abs(grid.points[a] - grid.points[b]);
      const MaternFit fit = fit_matern_params(cor, dist);
      rho = config.rho.value_or(fit.rho);
      nu = config.nu.value_or(fit.nu);
      if (!config.rho) h.rho_hat = fit.rho;
      if (!config.nu) h.nu_hat = fit.nu;
    }
    h.scale_spec.matern = MaternParams{rho, nu, 1.0};
  }
  h.scale_kernel = build_scale_kernel(h.scale_spec, grid.points, data, grid);

  if (config.sigma_s2) {
    h.sigma_s2_hat = *config.sigma_s2;
  } else {
    // Stand-in for a smoothed covariance estimate of E{Cov Y}: per-point
    // sample variances with the noise variance removed.
    const Vector var = pointwise_variance(data, grid);
    double trace_sig = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) trace_sig += std::max(var[j] - h.sigma_eps2_hat, 0.0);
    if (!(trace_sig > 0.0)) trace_sig = 1e-12;
    h.sigma_s2_hat = estimate_sigma_s2(trace_sig, h.sigma_eps2_hat, h.scale_kernel.trace(), p,
                                       h.delta);
  }

  const auto [a_eps, a_s] = derive_hyperpriors(h.sigma_eps2_hat, h.sigma_s2_hat, h.b_eps, h.b_s);
  h.a_eps = config.a_eps.value_or(a_eps);
  h.a_s = config.a_s.value_or(a_s);
  h.validate(p);
  return h;
}

}  // namespace bfda
