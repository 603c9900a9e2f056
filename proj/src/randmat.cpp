#include "bfda/randmat.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include <Eigen/Cholesky>

#include "bfda/kernels.hpp"
#include "bfda/linalg.hpp"

namespace bfda {

void log_warning(const std::string& msg) { std::cerr << "[bfda] warning: " << msg << '\n'; }

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t s = seed ^ (0xD1B54A32D192ED03ull * (stream_id + 1));
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s))};
  engine_.seed(seq);
}

double RngStream::normal() {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(engine_);
}

void RngStream::fill_normal(Vector& v) {
  std::normal_distribution<double> d(0.0, 1.0);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = d(engine_);
}

double RngStream::gamma(double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw config_error("gamma shape and rate must be positive");
  std::gamma_distribution<double> d(shape, 1.0 / rate);
  return d(engine_);
}

double RngStream::inverse_gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw config_error("inverse-gamma shape and scale must be positive");
  return 1.0 / gamma(shape, scale);
}

double RngStream::chi_squared(double df) {
  if (!(df > 0.0)) throw config_error("chi-squared df must be positive");
  std::gamma_distribution<double> d(0.5 * df, 2.0);
  return d(engine_);
}

double RngStream::uniform() {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  return d(engine_);
}

std::string RngStream::serialize_state() const {
  std::ostringstream ss;
  ss << engine_;
  return ss.str();
}

void RngStream::restore_state(const std::string& state) {
  std::istringstream ss(state);
  ss >> engine_;
  if (ss.fail()) throw data_error("bad RNG state string");
}

Vector sample_mvn(const Vector& mean, const Matrix& cov, RngStream& rng, double pd_floor) {
  if (mean.size() != cov.rows() || cov.rows() != cov.cols())
    throw config_error("sample_mvn: dimension mismatch");
  SymSolver solver(cov, pd_floor);
  if (solver.used_pseudo_inverse()) throw numeric_error("sample_mvn: covariance not factorizable");
  Vector z(mean.size());
  rng.fill_normal(z);
  return mean + solver.sqrt_mul(z);
}

Matrix bartlett_lower(double df, Eigen::Index p, RngStream& rng) {
  Matrix a = Matrix::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    a(j, j) = std::sqrt(rng.chi_squared(df - static_cast<double>(j)));
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = j + 1; i < p; ++i) a(i, j) = rng.normal();
  return a;
}

Matrix sample_wishart(double df, const Matrix& scale, RngStream& rng) {
  const Eigen::Index p = scale.rows();
  if (scale.rows() != scale.cols()) throw config_error("sample_wishart: scale must be square");
  if (!(df > static_cast<double>(p - 1)))
    throw config_error("sample_wishart: df must exceed p - 1");
  Eigen::LLT<Matrix> llt(scale);
  if (llt.info() != Eigen::Success) {
    SymSolver s(scale);
    if (s.used_pseudo_inverse()) throw numeric_error("sample_wishart: scale not positive definite");
    llt.compute(s.matrix());
  }
  const Matrix a = bartlett_lower(df, p, rng);
  const Matrix la = llt.matrixL() * a;
  Matrix w = Matrix::Zero(p, p);
  w.selfadjointView<Eigen::Lower>().rankUpdate(la);
  w.triangularView<Eigen::StrictlyUpper>() = w.transpose();
  return w;
}

IwFactors sample_iw_dawid_factors(double delta, const Eigen::LLT<Matrix>& psi_llt, RngStream& rng) {
  const Eigen::Index p = psi_llt.matrixLLT().rows();
  const double df = delta + static_cast<double>(p) - 1.0;
  const Matrix a = bartlett_lower(df, p, rng);
  // Sigma^{-1} = (L^{-T} A)(L^{-T} A)^T has Wishart(df, Psi^{-1}) law;
  // Sigma = (L A^{-T})(L A^{-T})^T is its inverse, by triangular solves only.
  IwFactors f;
  f.prec_sqrt = psi_llt.matrixU().solve(a);
  f.sigma_sqrt = a.triangularView<Eigen::Lower>()
                     .solve(Matrix(psi_llt.matrixL().transpose()))
                     .transpose();
  return f;
}

Matrix sample_iw_dawid(double delta, const Matrix& psi, RngStream& rng) {
  if (psi.rows() != psi.cols()) throw config_error("sample_iw_dawid: psi must be square");
  if (!(delta >= 3.0)) throw config_error("sample_iw_dawid: delta must be >= 3");
  if (delta < 5.0) log_warning("sample_iw_dawid: delta < 5 weakens marginalization guarantees");
  Eigen::LLT<Matrix> llt(psi);
  if (llt.info() != Eigen::Success) throw numeric_error("sample_iw_dawid: psi not positive definite");
  const IwFactors f = sample_iw_dawid_factors(delta, llt, rng);
  Matrix sigma = Matrix::Zero(psi.rows(), psi.cols());
  sigma.selfadjointView<Eigen::Lower>().rankUpdate(f.sigma_sqrt);
  sigma.triangularView<Eigen::StrictlyUpper>() = sigma.transpose();
  return sigma;
}

}  // namespace bfda
