#pragma once

#include <vector>

#include "dpkmeans/clustering.hpp"
#include "dpkmeans/common.hpp"

namespace dpkmeans {

/// Leave-one-out centroid differences. Column j holds
/// c(X) - c(X minus point source_point[j]) with cluster assignments held
/// fixed, so it is zero outside the d-block of the point's cluster.
struct DifferenceMatrix {
  Matrix columns;                   // Kd x M
  Vector norms;                     // column L2 norms, length M
  std::vector<Index> source_point;  // column -> original point index
  std::vector<Index> skipped;       // points whose removal empties a cluster

  Index kd() const { return columns.rows(); }
  Index count() const { return columns.cols(); }
};

/// Removing point p from cluster k with population n_k shifts only that
/// cluster's mean, by (x_p - c_k) / (n_k - 1). Singleton clusters cannot lose
/// their point; those columns are skipped and recorded.
DifferenceMatrix difference_matrix(const Dataset& data, const Partition& part,
                                   const CentroidSet& cents);

/// Query sensitivity: the largest column norm.
double sensitivity_delta(const DifferenceMatrix& diff);

enum class SelectionRule { kSmallestNorm, kLargestNorm };

/// Kd linearly independent difference columns and the square matrix they
/// form.
struct ActiveSet {
  std::vector<Index> indices;  // into DifferenceMatrix columns, size Kd
  Matrix matrix;               // Kd x Kd
};

/// Greedy scan in norm order (ascending for kSmallestNorm, descending for
/// kLargestNorm), accepting a column iff it increases numerical rank.
/// Duplicate columns (within 1e-12) are collapsed first.
ActiveSet select_active_set(const DifferenceMatrix& diff,
                            SelectionRule rule = SelectionRule::kLargestNorm);

}  // namespace dpkmeans
