#pragma once

#include <string>
#include <vector>

#include "bfda/types.hpp"

namespace bfda {

/// One observed trajectory: values y on a strictly increasing grid t.
struct Curve {
  std::string id;
  Vector t;
  Vector y;
};

/// A set of trajectories measured on common or uncommon grids.
///
/// Grids are canonically rounded to 12 significant digits at construction so
/// that grids originating from different files merge deterministically.
struct FunctionalDataset {
  std::vector<Curve> curves;
  double t_min = 0.0;
  double t_max = 0.0;

  Eigen::Index n_curves() const { return static_cast<Eigen::Index>(curves.size()); }
};

/// Sorted, deduplicated union of all curve grids together with, per curve,
/// the pooled indices it observes and the complement it misses.
struct PooledGrid {
  Vector points;
  std::vector<IndexVec> obs;  // obs[i]: pooled indices observed by curve i
  std::vector<IndexVec> mis;  // mis[i]: pooled indices missing for curve i

  Eigen::Index size() const { return points.size(); }
  bool common_grid() const;
};

enum class DataFormat { csv_long, json };

/// Round to 12 significant decimal digits; the canonical grid comparison key.
double round_sig(double x);

/// Validates invariants and canonically rounds grids; throws data_error.
FunctionalDataset make_dataset(std::vector<Curve> curves);

FunctionalDataset load_dataset(const std::string& path, DataFormat format);
void save_dataset(const FunctionalDataset& data, const std::string& path, DataFormat format);

DataFormat format_from_name(const std::string& name);

PooledGrid pool_grids(const FunctionalDataset& data);

/// Dense p x n matrix holding curve values at observed pooled indices and
/// `fill` elsewhere. Column i is curve i.
Matrix to_pooled_matrix(const FunctionalDataset& data, const PooledGrid& grid, double fill);

}  // namespace bfda
