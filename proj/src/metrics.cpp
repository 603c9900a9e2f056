#include "bfda/metrics.hpp"

#include <array>
#include <cmath>

namespace bfda {

Vector trapezoid_weights(const Vector& grid) {
  if (grid.size() < 2) throw config_error("trapezoid rule needs at least 2 grid points");
  const Eigen::Index p = grid.size();
  Vector w = Vector::Zero(p);
  for (Eigen::Index j = 0; j + 1 < p; ++j) {
    const double h = grid[j + 1] - grid[j];
    if (!(h > 0.0)) throw config_error("trapezoid rule needs an increasing grid");
    w[j] += 0.5 * h;
    w[j + 1] += 0.5 * h;
  }
  return w;
}

double rimse_curve(const Vector& est, const Vector& truth, const Vector& grid) {
  if (est.size() != truth.size() || est.size() != grid.size())
    throw config_error("rimse_curve: length mismatch");
  const Vector w = trapezoid_weights(grid);
  return std::sqrt((w.array() * (est - truth).array().square()).sum());
}

double rimse_surface(const Matrix& est, const Matrix& truth, const Vector& grid) {
  const Eigen::Index p = grid.size();
  if (est.rows() != p || est.cols() != p || truth.rows() != p || truth.cols() != p)
    throw config_error("rimse_surface: dimension mismatch");
  const Vector w = trapezoid_weights(grid);
  const Matrix sq = (est - truth).array().square();
  return std::sqrt(w.dot(sq * w));
}

Vector interpolate_linear(const Vector& x, const Vector& y, const Vector& xq) {
  if (x.size() != y.size() || x.size() < 2) throw config_error("interpolation needs matching inputs");
  Vector out(xq.size());
  for (Eigen::Index k = 0; k < xq.size(); ++k) {
    const double q = xq[k];
    if (q < x[0] || q > x[x.size() - 1])
      throw data_error("interpolation query outside the training grid");
    Eigen::Index hi = 1;
    while (hi < x.size() - 1 && x[hi] < q) ++hi;
    const double t = (q - x[hi - 1]) / (x[hi] - x[hi - 1]);
    out[k] = (1.0 - t) * y[hi - 1] + t * y[hi];
  }
  return out;
}

double predict_validation(const Matrix& smoothed, const Vector& train_grid, const Vector& val_grid,
                          const Matrix& val_values) {
  if (smoothed.rows() != train_grid.size())
    throw config_error("predict_validation: grid/matrix mismatch");
  if (val_values.rows() != val_grid.size() || val_values.cols() != smoothed.cols())
    throw config_error("predict_validation: validation shape mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < smoothed.cols(); ++i) {
    const Vector pred = interpolate_linear(train_grid, smoothed.col(i), val_grid);
    acc += (pred - val_values.col(i)).squaredNorm();
  }
  return std::sqrt(acc / static_cast<double>(val_values.size()));
}

AggregateReport aggregate_replicates(const std::vector<ReplicateReport>& reports) {
  if (reports.size() < 2) throw config_error("aggregation needs at least 2 replicates");
  const double r = static_cast<double>(reports.size());
  AggregateReport out;
  out.replicates = reports.size();

  auto fields = [](ReplicateReport& rep) {
    return std::array<double*, 7>{&rep.rimse_signals, &rep.rimse_mean, &rep.rimse_cov,
                                  &rep.rimse_cor,     &rep.coverage_z, &rep.coverage_mu,
                                  &rep.coverage_sigma};
  };
  auto cfields = [](const ReplicateReport& rep) {
    return std::array<const double*, 7>{&rep.rimse_signals, &rep.rimse_mean, &rep.rimse_cov,
                                        &rep.rimse_cor,     &rep.coverage_z, &rep.coverage_mu,
                                        &rep.coverage_sigma};
  };
  auto mean_f = fields(out.mean);
  auto se_f = fields(out.se);
  for (const auto& rep : reports) {
    auto src = cfields(rep);
    for (std::size_t k = 0; k < src.size(); ++k) *mean_f[k] += *src[k];
  }
  for (std::size_t k = 0; k < mean_f.size(); ++k) *mean_f[k] /= r;
  for (const auto& rep : reports) {
    auto src = cfields(rep);
    for (std::size_t k = 0; k < src.size(); ++k) {
      const double d = *src[k] - *mean_f[k];
      *se_f[k] += d * d;
    }
  }
  for (std::size_t k = 0; k < se_f.size(); ++k)
    *se_f[k] = std::sqrt(*se_f[k] / (r - 1.0)) / std::sqrt(r);

  std::size_t npred = 0;
  double pm = 0.0;
  for (const auto& rep : reports)
    if (rep.prediction_rmse) {
      pm += *rep.prediction_rmse;
      ++npred;
    }
  if (npred == reports.size()) {
    pm /= r;
    double v = 0.0;
    for (const auto& rep : reports) v += (*rep.prediction_rmse - pm) * (*rep.prediction_rmse - pm);
    out.mean.prediction_rmse = pm;
    out.se.prediction_rmse = std::sqrt(v / (r - 1.0)) / std::sqrt(r);
  }
  return out;
}

}  // namespace bfda
