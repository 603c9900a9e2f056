#include "bfda/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "bfda/kernels.hpp"
#include "bfda/linalg.hpp"

namespace bfda {

void SimSpec::validate() const {
  if (n < 1 || p < 2) throw config_error("sim spec needs n >= 1 and p >= 2");
  if (!(t1 > t0)) throw config_error("sim spec needs t1 > t0");
  if (!(sigma2 > 0.0 && rho > 0.0 && nu > 0.0)) throw config_error("sim spec kernel params must be positive");
  if (!(sigma_eps >= 0.0)) throw config_error("sim spec noise sd must be nonnegative");
  if (!(retain_fraction > 0.0 && retain_fraction <= 1.0))
    throw config_error("retain_fraction must be in (0, 1]");
}

SimKind sim_kind_from_name(const std::string& name) {
  if (name == "stationary") return SimKind::stationary;
  if (name == "nonstationary") return SimKind::nonstationary;
  throw config_error("unknown simulation kind '" + name + "'");
}

std::string to_string(SimKind kind) {
  return kind == SimKind::stationary ? "stationary" : "nonstationary";
}

namespace {

double warp_h(double t) { return t + 0.5; }
double warp_xi(double t) { return std::pow(t, 2.0 / 3.0); }

}  // namespace

Vector sim_true_mean(const SimSpec& spec, const Vector& grid) {
  Vector mu(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j) {
    if (spec.kind == SimKind::stationary)
      mu[j] = spec.mean_amp * std::sin(spec.mean_freq * grid[j]);
    else
      mu[j] = spec.mean_amp * warp_h(grid[j]) * std::sin(spec.mean_freq * warp_xi(grid[j]));
  }
  return mu;
}

Matrix sim_true_cov(const SimSpec& spec, const Vector& grid) {
  const Eigen::Index p = grid.size();
  Matrix cov(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k <= j; ++k) {
      double v;
      if (spec.kind == SimKind::stationary) {
        v = spec.sigma2 * matern_cor(std::abs(grid[j] - grid[k]), spec.rho, spec.nu);
      } else {
        const double d = std::abs(warp_xi(grid[j]) - warp_xi(grid[k]));
        v = spec.sigma2 * warp_h(grid[j]) * warp_h(grid[k]) * matern_cor(d, spec.rho, spec.nu);
      }
      cov(j, k) = v;
      cov(k, j) = v;
    }
  }
  return cov;
}

SimResult generate(const SimSpec& spec) {
  spec.validate();
  SimResult out;
  out.grid = Vector::LinSpaced(spec.p, spec.t0, spec.t1);
  for (Eigen::Index j = 0; j < spec.p; ++j) out.grid[j] = round_sig(out.grid[j]);
  out.true_mean = sim_true_mean(spec, out.grid);
  out.true_cov = sim_true_cov(spec, out.grid);

  // Paths are drawn through the eigendecomposition square root; the kernel
  // can be numerically semidefinite at this grid resolution.
  Eigen::SelfAdjointEigenSolver<Matrix> es(out.true_cov);
  if (es.info() != Eigen::Success) throw numeric_error("simulation kernel eigendecomposition failed");
  const Matrix sqrt_cov =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  RngStream rng(spec.seed, 900001);
  out.truth.resize(spec.p, spec.n);
  Vector z(spec.p);
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    rng.fill_normal(z);
    out.truth.col(i) = out.true_mean + sqrt_cov * z;
  }

  std::vector<Curve> curves;
  curves.reserve(static_cast<std::size_t>(spec.n));
  const int width = spec.n >= 1000 ? 4 : 3;
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    Curve c;
    std::string num = std::to_string(i + 1);
    c.id = std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(num.size()))),
                       '0') + num;
    c.t = out.grid;
    c.y = out.truth.col(i);
    for (Eigen::Index j = 0; j < spec.p; ++j) c.y[j] += spec.sigma_eps * rng.normal();
    curves.push_back(std::move(c));
  }
  out.data = make_dataset(std::move(curves));

  if (spec.retain_fraction < 1.0) {
    RngStream sparsify_rng(spec.seed, 900002);
    out.data = sparsify(out.data, spec.retain_fraction, sparsify_rng);
  }
  return out;
}

FunctionalDataset sparsify(const FunctionalDataset& data, double retain_fraction, RngStream& rng) {
  if (!(retain_fraction > 0.0 && retain_fraction <= 1.0))
    throw config_error("retain_fraction must be in (0, 1]");
  if (retain_fraction == 1.0) return data;
  std::vector<Curve> curves;
  curves.reserve(data.curves.size());
  for (const auto& c : data.curves) {
    const auto p = static_cast<std::size_t>(c.t.size());
    const auto keep = static_cast<std::size_t>(
        std::ceil(retain_fraction * static_cast<double>(p) - 1e-12));
    if (keep < 2) throw data_error("sparsify would leave curve '" + c.id + "' with fewer than 2 points");
    // Partial Fisher-Yates selection of `keep` distinct indices.
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), 0u);
    for (std::size_t j = 0; j < keep; ++j) {
      const auto r = j + static_cast<std::size_t>(rng.uniform() * static_cast<double>(p - j));
      std::swap(idx[j], idx[std::min(r, p - 1)]);
    }
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    Curve s;
    s.id = c.id;
    s.t.resize(static_cast<Eigen::Index>(keep));
    s.y.resize(static_cast<Eigen::Index>(keep));
    for (std::size_t j = 0; j < keep; ++j) {
      s.t[static_cast<Eigen::Index>(j)] = c.t[static_cast<Eigen::Index>(idx[j])];
      s.y[static_cast<Eigen::Index>(j)] = c.y[static_cast<Eigen::Index>(idx[j])];
    }
    curves.push_back(std::move(s));
  }
  return make_dataset(std::move(curves));
}

BlsResult bls_oracle(const Matrix& y, const Vector& true_mu, const Matrix& true_sigma,
                     double sigma_eps2) {
  const Eigen::Index p = y.rows();
  if (true_mu.size() != p || true_sigma.rows() != p || true_sigma.cols() != p)
    throw config_error("bls_oracle: dimension mismatch");
  Matrix g = true_sigma;
  g.diagonal().array() += sigma_eps2;
  SymSolver solver(g);
  BlsResult out;
  const Matrix centered = y.colwise() - true_mu;
  out.smoothed = (true_sigma * solver.solve(centered)).colwise() + true_mu;
  out.cond_cov = true_sigma - true_sigma * solver.solve(true_sigma);
  return out;
}

}  // namespace bfda
