#include "bfda/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "bfda/io.hpp"

namespace bfda {

void MaternParams::validate() const {
  if (!(rho > 0.0)) throw config_error("matern rho must be positive");
  if (!(nu > 0.0)) throw config_error("matern nu must be positive");
  if (!(sigma_s2 > 0.0)) throw config_error("matern sigma_s2 must be positive");
}

namespace {

bool half_integer_order(double nu, int& m) {
  const double twice = 2.0 * nu;
  const double r = std::round(twice);
  if (std::abs(twice - r) > 1e-9) return false;
  const long k = static_cast<long>(r);
  if (k % 2 == 0) return false;  // integer order, no closed form
  m = static_cast<int>((k - 1) / 2);
  return true;
}

// Matern_cor for nu = m + 1/2:
//   prefactor * exp(-x) * sum_k c_k 2^{-k} x^{m-k},
//   c_k = (m+k)! / (k! (m-k)!)
double matern_half_integer(double x, int m) {
  double pref = std::exp((0.5 - m) * std::numbers::ln2_v<double> +
                         0.5 * std::log(std::numbers::pi_v<double> / 2.0) -
                         std::lgamma(m + 0.5));
  double c = 1.0;
  double poly = std::pow(x, m);
  double xpow = poly;
  for (int k = 1; k <= m; ++k) {
    c *= static_cast<double>((m + k) * (m - k + 1)) / static_cast<double>(k);
    xpow = (m - k == 0) ? 1.0 : std::pow(x, m - k);
    poly += c * std::ldexp(xpow, -k);
  }
  return pref * poly * std::exp(-x);
}

}  // namespace

double matern_cor_bessel(double d, double rho, double nu) {
  if (d < 0.0) throw config_error("matern distance must be nonnegative");
  if (!(rho > 0.0) || !(nu > 0.0)) throw config_error("matern rho and nu must be positive");
  if (d == 0.0) return 1.0;
  const double x = std::sqrt(2.0 * nu) * d / rho;
  const double k = std::cyl_bessel_k(nu, x);
  if (k == 0.0) return 0.0;  // underflow far in the tail
  if (!std::isfinite(k)) return 1.0;  // K overflows only when x is tiny relative to nu
  const double logc = (1.0 - nu) * std::numbers::ln2_v<double> - std::lgamma(nu) +
                      nu * std::log(x) + std::log(k);
  return std::exp(logc);
}

double matern_cor(double d, double rho, double nu) {
  if (d < 0.0) throw config_error("matern distance must be nonnegative");
  if (!(rho > 0.0) || !(nu > 0.0)) throw config_error("matern rho and nu must be positive");
  if (d == 0.0) return 1.0;
  int m = 0;
  if (half_integer_order(nu, m)) {
    const double x = std::sqrt(2.0 * nu) * d / rho;
    return matern_half_integer(x, m);
  }
  return matern_cor_bessel(d, rho, nu);
}

Matrix matern_matrix(const Vector& grid, const MaternParams& params) {
  params.validate();
  const Eigen::Index p = grid.size();
  Matrix out(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    out(j, j) = params.sigma_s2;
    for (Eigen::Index k = 0; k < j; ++k) {
      const double v = params.sigma_s2 * matern_cor(std::abs(grid[j] - grid[k]), params.rho, params.nu);
      out(j, k) = v;
      out(k, j) = v;
    }
  }
  return out;
}

Matrix nearest_pd(const Matrix& m, double pd_floor) {
  if (m.rows() != m.cols()) throw config_error("nearest_pd needs a square matrix");
  if (!m.allFinite()) throw numeric_error("nearest_pd: non-finite entries");
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw numeric_error("nearest_pd: eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  const double floor_abs = pd_floor * std::max(ev[ev.size() - 1], 1.0);
  if (ev[0] >= floor_abs * (1.0 - 1e-12)) return sym;
  Vector clamped = ev.cwiseMax(floor_abs);
  Matrix out = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
  out = 0.5 * (out + out.transpose());
  return out;
}

ScaleKernelKind scale_kernel_kind_from_name(const std::string& name) {
  if (name == "matern") return ScaleKernelKind::matern;
  if (name == "empirical") return ScaleKernelKind::empirical;
  if (name == "file") return ScaleKernelKind::file;
  throw config_error("unknown scale kernel kind '" + name + "'");
}

std::string to_string(ScaleKernelKind kind) {
  switch (kind) {
    case ScaleKernelKind::matern: return "matern";
    case ScaleKernelKind::empirical: return "empirical";
    case ScaleKernelKind::file: return "file";
  }
  return "?";
}

Vector smooth_moving_average(const Vector& v, int window) {
  if (window < 1 || window % 2 == 0) throw config_error("smoothing window must be odd and >= 1");
  const Eigen::Index p = v.size();
  const Eigen::Index h = window / 2;
  Vector out(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::Index r = std::min({h, j, p - 1 - j});
    out[j] = v.segment(j - r, 2 * r + 1).mean();
  }
  return out;
}

Matrix smooth_moving_average(const Matrix& m, int window) {
  if (window < 1 || window % 2 == 0) throw config_error("smoothing window must be odd and >= 1");
  const Eigen::Index p = m.rows(), q = m.cols();
  const Eigen::Index h = window / 2;
  Matrix out(p, q);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::Index ri = std::min({h, i, p - 1 - i});
    for (Eigen::Index j = 0; j < q; ++j) {
      const Eigen::Index rj = std::min({h, j, q - 1 - j});
      out(i, j) = m.block(i - ri, j - rj, 2 * ri + 1, 2 * rj + 1).mean();
    }
  }
  return out;
}

Matrix pairwise_covariance(const FunctionalDataset& data, const PooledGrid& pooled) {
  const Eigen::Index p = pooled.size();
  const Eigen::Index n = data.n_curves();
  Vector count = Vector::Zero(p);
  Vector mean = Vector::Zero(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = pooled.obs[static_cast<std::size_t>(i)];
    const auto& y = data.curves[static_cast<std::size_t>(i)].y;
    for (std::size_t j = 0; j < o.size(); ++j) {
      count[o[j]] += 1.0;
      mean[o[j]] += y[static_cast<Eigen::Index>(j)];
    }
  }
  for (Eigen::Index j = 0; j < p; ++j)
    if (count[j] > 0) mean[j] /= count[j];

  Matrix acc = Matrix::Zero(p, p);
  Matrix cnt = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = pooled.obs[static_cast<std::size_t>(i)];
    const auto& y = data.curves[static_cast<std::size_t>(i)].y;
    for (std::size_t a = 0; a < o.size(); ++a) {
      const double da = y[static_cast<Eigen::Index>(a)] - mean[o[a]];
      for (std::size_t b = 0; b <= a; ++b) {
        const double db = y[static_cast<Eigen::Index>(b)] - mean[o[b]];
        acc(o[a], o[b]) += da * db;
        cnt(o[a], o[b]) += 1.0;
      }
    }
  }
  double max_count = 0.0;
  Matrix cov = Matrix::Zero(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      max_count = std::max(max_count, cnt(a, b));
      if (cnt(a, b) >= 2.0) {
        const double v = acc(a, b) / (cnt(a, b) - 1.0);
        cov(a, b) = v;
        cov(b, a) = v;
      }
    }
  }
  if (max_count < 2.0)
    throw data_error("empirical covariance impossible: no grid pair observed by two curves");
  return cov;
}

Matrix build_scale_kernel(const ScaleKernelSpec& spec, const Vector& grid,
                          const FunctionalDataset& data, const PooledGrid& pooled) {
  const Eigen::Index p = grid.size();
  switch (spec.kind) {
    case ScaleKernelKind::matern: {
      MaternParams cor = spec.matern;
      cor.sigma_s2 = 1.0;
      return nearest_pd(matern_matrix(grid, cor), spec.pd_floor);
    }
    case ScaleKernelKind::empirical: {
      Matrix cov = pairwise_covariance(data, pooled);
      cov = smooth_moving_average(cov, spec.smoothing_window);
      Vector d = cov.diagonal().cwiseMax(1e-12).cwiseSqrt();
      Matrix cor = cov.array() / (d * d.transpose()).array();
      return nearest_pd(cor, spec.pd_floor);
    }
    case ScaleKernelKind::file: {
      Matrix m = io::read_matrix_any(spec.path);
      if (m.rows() != p || m.cols() != p)
        throw data_error("scale kernel file is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(p) + "x" +
                         std::to_string(p));
      return nearest_pd(m, spec.pd_floor);
    }
  }
  throw config_error("unhandled scale kernel kind");
}

}  // namespace bfda
