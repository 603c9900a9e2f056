#pragma once

#include <optional>
#include <string>

#include "bfda/dataset.hpp"
#include "bfda/types.hpp"

namespace bfda {

/// Stationary Matern covariance parameters: length-scale rho, order nu, and
/// variance sigma_s2 (so the kernel is sigma_s2 * Matern_cor(d; rho, nu)).
struct MaternParams {
  double rho = 1.0;
  double nu = 2.5;
  double sigma_s2 = 1.0;

  void validate() const;
};

/// Matern correlation at distance d. Half-integer orders use the closed
/// polynomial-times-exponential form; other orders go through the Bessel-K
/// formula evaluated in log space.
double matern_cor(double d, double rho, double nu);

/// Bessel-K route regardless of nu; exposed so the closed forms can be
/// checked against it.
double matern_cor_bessel(double d, double rho, double nu);

/// p x p matrix with entries sigma_s2 * matern_cor(|t_j - t_k|).
Matrix matern_matrix(const Vector& grid, const MaternParams& params);

/// Symmetrize and clamp eigenvalues from below at pd_floor * max(lambda_max, 1).
/// Returns the input unchanged when its spectrum already clears the floor.
Matrix nearest_pd(const Matrix& m, double pd_floor);

enum class ScaleKernelKind { matern, empirical, file };

struct ScaleKernelSpec {
  ScaleKernelKind kind = ScaleKernelKind::matern;
  MaternParams matern;       // kind == matern
  std::string path;          // kind == file
  int smoothing_window = 5;  // kind == empirical
  double pd_floor = 1e-10;
};

ScaleKernelKind scale_kernel_kind_from_name(const std::string& name);
std::string to_string(ScaleKernelKind kind);

/// Builds the positive-definite scale kernel A on the pooled grid.
/// matern: unit-diagonal correlation matrix.
/// empirical: moving-average smoothed sample covariance of the raw curves,
///            rescaled to unit diagonal, PD-repaired.
/// file: dense matrix read from disk, symmetrized and PD-repaired.
Matrix build_scale_kernel(const ScaleKernelSpec& spec, const Vector& grid,
                          const FunctionalDataset& data, const PooledGrid& pooled);

/// Pairwise-complete sample covariance on the pooled grid; entries with fewer
/// than two joint observers are zero. Throws data_error when no entry has two.
Matrix pairwise_covariance(const FunctionalDataset& data, const PooledGrid& pooled);

/// Centered moving average over both axes with the window shrunk
/// symmetrically near the edges.
Matrix smooth_moving_average(const Matrix& m, int window);
Vector smooth_moving_average(const Vector& v, int window);

}  // namespace bfda
