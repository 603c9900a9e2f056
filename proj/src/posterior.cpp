#include "bfda/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "bfda/io.hpp"

namespace bfda {

namespace fs = std::filesystem;

Vector empirical_quantiles(const Vector& draws, const std::vector<double>& probs) {
  if (draws.size() == 0) throw config_error("quantiles of an empty sample");
  std::vector<double> sorted(draws.data(), draws.data() + draws.size());
  std::sort(sorted.begin(), sorted.end());
  Vector out(static_cast<Eigen::Index>(probs.size()));
  const double n = static_cast<double>(sorted.size());
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double h = (n - 1.0) * std::clamp(probs[k], 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double w = h - std::floor(h);
    out[static_cast<Eigen::Index>(k)] = (1.0 - w) * sorted[lo] + w * sorted[hi];
  }
  return out;
}

namespace {

ScalarSummary summarize_scalar(const Vector& draws, double level) {
  ScalarSummary s;
  s.mean = draws.mean();
  const double a = 0.5 * (1.0 - level);
  Vector q = empirical_quantiles(draws, {a, 1.0 - a});
  s.lower = q[0];
  s.upper = q[1];
  return s;
}

// Per-row empirical quantiles of a (coords x draws) matrix.
void row_quantiles(const Matrix& draws, double level, Matrix& lower, Matrix& upper,
                   Eigen::Index rows, Eigen::Index cols) {
  const double a = 0.5 * (1.0 - level);
  lower.resize(rows, cols);
  upper.resize(rows, cols);
  std::vector<double> buf(static_cast<std::size_t>(draws.cols()));
  for (Eigen::Index r = 0; r < draws.rows(); ++r) {
    for (Eigen::Index k = 0; k < draws.cols(); ++k) buf[static_cast<std::size_t>(k)] = draws(r, k);
    std::sort(buf.begin(), buf.end());
    const double n = static_cast<double>(buf.size());
    auto interp = [&](double prob) {
      const double h = (n - 1.0) * prob;
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const auto hi = std::min(lo + 1, buf.size() - 1);
      const double w = h - std::floor(h);
      return (1.0 - w) * buf[lo] + w * buf[hi];
    };
    lower(r % rows, r / rows) = interp(a);
    upper(r % rows, r / rows) = interp(1.0 - a);
  }
}

}  // namespace

PosteriorSummary summarize(const Chain& chain, double level, bool require_cov_ci) {
  if (chain.kept < 1) throw config_error("summarize: empty chain");
  if (!(level > 0.0 && level < 1.0)) throw config_error("summarize: level must be in (0,1)");
  if (require_cov_ci && static_cast<long>(chain.cov_full.size()) < 100)
    throw config_error("summarize: covariance CI requested but fewer than 100 full draws stored");
  const Eigen::Index p = chain.p, n = chain.n;
  PosteriorSummary s;
  s.grid = chain.grid;
  s.curve_ids = chain.curve_ids;
  s.level = level;
  s.kept = chain.kept;
  s.wall_seconds = chain.wall_seconds;
  s.degenerate_curve_sweeps = chain.degenerate_curve_sweeps;

  if (chain.signals.size() > 0) {
    const auto sig = chain.signals.leftCols(chain.kept);
    s.signal_mean.resize(p, n);
    Vector rowmean = sig.rowwise().mean();
    for (Eigen::Index i = 0; i < n; ++i) s.signal_mean.col(i) = rowmean.segment(i * p, p);
    row_quantiles(sig, level, s.signal_lower, s.signal_upper, p, n);
  }
  if (chain.mean.size() > 0) {
    const auto m = chain.mean.leftCols(chain.kept);
    s.mean_curve = m.rowwise().mean();
    Matrix lo, hi;
    row_quantiles(m, level, lo, hi, p, 1);
    s.mean_lower = lo.col(0);
    s.mean_upper = hi.col(0);
  }
  if (chain.cov_diag.size() > 0)
    s.cov_diag_mean = chain.cov_diag.leftCols(chain.kept).rowwise().mean();

  if (!chain.cov_full.empty()) {
    const auto nfull = static_cast<Eigen::Index>(chain.cov_full.size());
    Matrix cov_mean = Matrix::Zero(p, p);
    Matrix cor_mean = Matrix::Zero(p, p);
    for (const Matrix& c : chain.cov_full) {
      cov_mean += c;
      Vector d = c.diagonal().cwiseMax(0.0).cwiseSqrt();
      cor_mean.array() += c.array() / (d * d.transpose()).array().max(1e-300);
    }
    s.covariance_mean = cov_mean / static_cast<double>(nfull);
    s.correlation_mean = cor_mean / static_cast<double>(nfull);
    if (nfull >= 100) {
      Matrix flat(p * p, nfull);
      for (Eigen::Index k = 0; k < nfull; ++k)
        flat.col(k) =
            Eigen::Map<const Vector>(chain.cov_full[static_cast<std::size_t>(k)].data(), p * p);
      row_quantiles(flat, level, s.covariance_lower, s.covariance_upper, p, p);
    }
  }

  s.sigma_eps2 = summarize_scalar(chain.sigma_eps2.head(chain.kept), level);
  s.sigma_s2 = summarize_scalar(chain.sigma_s2.head(chain.kept), level);
  return s;
}

double gelman_rubin(const std::vector<Vector>& chains) {
  if (chains.size() < 2) throw config_error("gelman_rubin needs at least 2 chains");
  const Eigen::Index len = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != len) throw config_error("gelman_rubin: chains must have equal length");
  if (len < 10) throw config_error("gelman_rubin: chains too short");

  // Split each chain in half.
  const Eigen::Index half = len / 2;
  std::vector<Vector> seqs;
  for (const auto& c : chains) {
    seqs.push_back(c.head(half));
    seqs.push_back(c.segment(half, half));
  }
  const double m = static_cast<double>(seqs.size());
  const double nn = static_cast<double>(half);

  double mean_of_means = 0.0;
  std::vector<double> means, vars;
  for (const auto& s : seqs) {
    const double mu = s.mean();
    means.push_back(mu);
    vars.push_back((s.array() - mu).square().sum() / (nn - 1.0));
    mean_of_means += mu;
  }
  mean_of_means /= m;
  double b = 0.0;
  for (double mu : means) b += (mu - mean_of_means) * (mu - mean_of_means);
  b *= nn / (m - 1.0);
  double w = 0.0;
  for (double v : vars) w += v;
  w /= m;

  if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (nn - 1.0) / nn * w + b / nn;
  return std::sqrt(var_plus / w);
}

double coverage_probability(const Matrix& lower, const Matrix& upper, const Matrix& truth) {
  if (lower.rows() != truth.rows() || lower.cols() != truth.cols() ||
      upper.rows() != truth.rows() || upper.cols() != truth.cols())
    throw config_error("coverage_probability: dimension mismatch");
  long hit = 0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j)
    for (Eigen::Index i = 0; i < truth.rows(); ++i)
      if (truth(i, j) >= lower(i, j) && truth(i, j) <= upper(i, j)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

std::map<std::string, Vector> monitored_scalars(const Chain& chain) {
  std::map<std::string, Vector> out;
  out["sigma_eps2"] = chain.sigma_eps2.head(chain.kept);
  out["sigma_s2"] = chain.sigma_s2.head(chain.kept);
  const Eigen::Index p = chain.p;
  if (chain.mean.size() > 0) {
    for (int k = 0; k < 5; ++k) {
      const Eigen::Index j = (p - 1) * k / 4;
      out["mu[" + std::to_string(j) + "]"] = chain.mean.row(j).head(chain.kept).transpose();
    }
  }
  if (chain.cov_diag.size() > 0) {
    for (int k = 0; k < 3; ++k) {
      const Eigen::Index j = (p - 1) * k / 2;
      out["Sigma_diag[" + std::to_string(j) + "]"] =
          chain.cov_diag.row(j).head(chain.kept).transpose();
    }
  }
  return out;
}

std::map<std::string, double> diagnose_chains(const std::vector<Chain>& chains) {
  if (chains.size() < 2) throw config_error("diagnosis needs at least 2 chains");
  std::vector<std::map<std::string, Vector>> mons;
  for (const auto& c : chains) mons.push_back(monitored_scalars(c));
  std::map<std::string, double> out;
  for (const auto& [name, first] : mons.front()) {
    std::vector<Vector> seqs;
    for (const auto& m : mons) seqs.push_back(m.at(name));
    out[name] = gelman_rubin(seqs);
  }
  return out;
}

void write_summary(const PosteriorSummary& s, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path d(dir);
  io::write_vector_csv(s.grid, (d / "grid.csv").string());
  if (s.signal_mean.size() > 0) {
    io::write_matrix_csv(s.signal_mean, (d / "signal_mean.csv").string());
    io::write_matrix_csv(s.signal_lower, (d / "signal_lower.csv").string());
    io::write_matrix_csv(s.signal_upper, (d / "signal_upper.csv").string());
  }
  if (s.mean_curve.size() > 0) {
    Matrix m(s.mean_curve.size(), 4);
    m.col(0) = s.grid;
    m.col(1) = s.mean_curve;
    m.col(2) = s.mean_lower;
    m.col(3) = s.mean_upper;
    io::write_matrix_csv(m, (d / "mean_curve.csv").string());
  }
  if (s.covariance_mean.size() > 0) {
    io::write_matrix_csv(s.covariance_mean, (d / "covariance_mean.csv").string());
    io::write_matrix_csv(s.correlation_mean, (d / "correlation_mean.csv").string());
  }
  if (s.covariance_lower.size() > 0) {
    io::write_matrix_csv(s.covariance_lower, (d / "covariance_lower.csv").string());
    io::write_matrix_csv(s.covariance_upper, (d / "covariance_upper.csv").string());
  }
  if (s.cov_diag_mean.size() > 0)
    io::write_vector_csv(s.cov_diag_mean, (d / "covariance_diag_mean.csv").string());

  nlohmann::json j;
  j["level"] = s.level;
  j["kept"] = s.kept;
  j["sigma_eps2"] = {{"mean", s.sigma_eps2.mean}, {"lower", s.sigma_eps2.lower}, {"upper", s.sigma_eps2.upper}};
  j["sigma_s2"] = {{"mean", s.sigma_s2.mean}, {"lower", s.sigma_s2.lower}, {"upper", s.sigma_s2.upper}};
  j["rhat"] = s.rhat;
  j["degenerate_curve_sweeps"] = s.degenerate_curve_sweeps;
  io::write_text_file((d / "scalars.json").string(), j.dump(2) + "\n");
}

void write_scalar_chains(const Chain& chain, const std::string& path) {
  const auto mons = monitored_scalars(chain);
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  out << "iter";
  for (const auto& [name, v] : mons) out << ',' << name;
  out << ",loglik\n";
  for (long k = 0; k < chain.kept; ++k) {
    out << k;
    for (const auto& [name, v] : mons) out << ',' << io::format_double(v[k]);
    out << ',' << io::format_double(chain.loglik[k]) << '\n';
  }
}

std::map<std::string, Vector> read_scalar_chains(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw data_error("'" + path + "': empty chain file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> names;
  {
    std::istringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) names.push_back(tok);
  }
  std::vector<std::vector<double>> cols(names.size());
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::size_t k = 0;
    while (std::getline(ss, tok, ',')) {
      if (k >= names.size())
        throw data_error("'" + path + "' line " + std::to_string(lineno) + ": too many fields");
      try {
        cols[k].push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw data_error("'" + path + "' line " + std::to_string(lineno) + ": parse failure");
      }
      ++k;
    }
    if (k != names.size())
      throw data_error("'" + path + "' line " + std::to_string(lineno) + ": missing fields");
  }
  std::map<std::string, Vector> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    Vector v(static_cast<Eigen::Index>(cols[k].size()));
    for (std::size_t i = 0; i < cols[k].size(); ++i) v[static_cast<Eigen::Index>(i)] = cols[k][i];
    out[names[k]] = std::move(v);
  }
  return out;
}

}  // namespace bfda
