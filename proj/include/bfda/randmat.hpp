#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "bfda/types.hpp"

namespace bfda {

/// Deterministic random stream identified by (seed, stream_id). Identical
/// pairs reproduce identical draw sequences; distinct stream ids are mixed
/// into statistically independent engines. A stream must not be shared
/// across threads.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double normal();
  void fill_normal(Vector& v);
  double gamma(double shape, double rate);
  double inverse_gamma(double shape, double scale);
  double chi_squared(double df);
  double uniform();  // [0, 1)

  /// Engine state as text; with (seed, stream_id) this makes a stream fully
  /// resumable from a checkpoint.
  std::string serialize_state() const;
  void restore_state(const std::string& state);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

/// mean + L z for L the (repaired-if-needed) Cholesky factor of cov.
Vector sample_mvn(const Vector& mean, const Matrix& cov, RngStream& rng, double pd_floor = 1e-10);

/// Bartlett construction; df may be fractional but must exceed p - 1.
Matrix sample_wishart(double df, const Matrix& scale, RngStream& rng);

/// Inverse-Wishart in the Dawid parameterization: Sigma^{-1} ~ Wishart(delta
/// + p - 1, Psi^{-1}). delta below 5 is flagged with a warning; delta < 3 is
/// rejected so that the mean Psi/(delta-2) exists.
Matrix sample_iw_dawid(double delta, const Matrix& psi, RngStream& rng);

/// Square-root factors of one Dawid inverse-Wishart draw with scale
/// Psi = L_psi L_psi^T: Sigma = sigma_sqrt sigma_sqrt^T and
/// Sigma^{-1} = prec_sqrt prec_sqrt^T. The hot path of the Gibbs sampler
/// consumes the factors directly.
struct IwFactors {
  Matrix sigma_sqrt;
  Matrix prec_sqrt;
};
IwFactors sample_iw_dawid_factors(double delta, const Eigen::LLT<Matrix>& psi_llt, RngStream& rng);

/// Lower-triangular Bartlett factor: chi draws on the diagonal, standard
/// normals strictly below.
Matrix bartlett_lower(double df, Eigen::Index p, RngStream& rng);

void log_warning(const std::string& msg);

}  // namespace bfda
