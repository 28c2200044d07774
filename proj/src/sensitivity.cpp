#include "dpkmeans/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dpkmeans {

DifferenceMatrix difference_matrix(const Dataset& data, const Partition& part,
                                   const CentroidSet& cents) {
  const Index p = data.num_points();
  const Index d = data.dim();
  const Index k = cents.k();
  if (static_cast<Index>(part.labels.size()) != p || part.k != k ||
      cents.dim() != d) {
    throw DimensionError("difference_matrix: partition/centroids inconsistent");
  }

  DifferenceMatrix diff;
  std::vector<Index> kept;
  kept.reserve(p);
  for (Index i = 0; i < p; ++i) {
    if (part.counts[part.labels[i]] < 2) {
      diff.skipped.push_back(i);
    } else {
      kept.push_back(i);
    }
  }

  const Index m = static_cast<Index>(kept.size());
  diff.columns = Matrix::Zero(k * d, m);
  diff.norms = Vector::Zero(m);
  diff.source_point = kept;
  for (Index j = 0; j < m; ++j) {
    const Index i = kept[j];
    const int c = part.labels[i];
    const double nk = static_cast<double>(part.counts[c]);
    diff.columns.block(c * d, j, d, 1) =
        (data.points.row(i) - cents.centroids.row(c)).transpose() / (nk - 1.0);
    diff.norms[j] = diff.columns.col(j).norm();
  }
  return diff;
}

double sensitivity_delta(const DifferenceMatrix& diff) {
  if (diff.count() == 0) {
    throw EmptyDifferencesError("sensitivity_delta: no difference columns");
  }
  return diff.norms.maxCoeff();
}

namespace {

constexpr double kDuplicateTol = 1e-12;
constexpr double kRankResidualTol = 1e-10;

}  // namespace

ActiveSet select_active_set(const DifferenceMatrix& diff, SelectionRule rule) {
  const Index kd = diff.kd();
  const Index m = diff.count();
  if (m < kd) {
    throw RankDeficientError("select_active_set: fewer columns than Kd");
  }

  // Collapse duplicates: sort by norm, compare entrywise within the window of
  // near-equal norms.
  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return diff.norms[a] < diff.norms[b];
  });
  std::vector<bool> dup(m, false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (dup[order[i]]) continue;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (diff.norms[order[j]] - diff.norms[order[i]] > 2 * kDuplicateTol * kd) {
        break;
      }
      if (!dup[order[j]] &&
          (diff.columns.col(order[i]) - diff.columns.col(order[j]))
                  .cwiseAbs()
                  .maxCoeff() <= kDuplicateTol) {
        dup[order[j]] = true;
      }
    }
  }

  std::vector<Index> candidates;
  candidates.reserve(m);
  for (Index j : order) {
    if (!dup[j]) candidates.push_back(j);
  }
  if (rule == SelectionRule::kLargestNorm) {
    std::reverse(candidates.begin(), candidates.end());
  }

  // Greedy rank filter: accept a column iff its Gram-Schmidt residual against
  // the accepted span exceeds 1e-10 of its own norm.
  ActiveSet active;
  Matrix basis(kd, kd);  // orthonormal columns of the accepted span
  Index rank = 0;
  for (Index j : candidates) {
    if (rank == kd) break;
    Vector v = diff.columns.col(j);
    const double scale = v.norm();
    if (scale <= 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (Index r = 0; r < rank; ++r) {
        v -= basis.col(r).dot(v) * basis.col(r);
      }
    }
    const double residual = v.norm();
    if (residual > kRankResidualTol * scale) {
      basis.col(rank) = v / residual;
      active.indices.push_back(j);
      ++rank;
    }
  }
  if (rank < kd) {
    throw RankDeficientError("select_active_set: only " + std::to_string(rank) +
                             " independent columns, need " + std::to_string(kd));
  }

  active.matrix.resize(kd, kd);
  for (Index i = 0; i < kd; ++i) {
    active.matrix.col(i) = diff.columns.col(active.indices[i]);
  }

  Eigen::JacobiSVD<Matrix> svd(active.matrix);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= 1e-10 * sv[0]) {
    throw RankDeficientError("select_active_set: active matrix near-singular");
  }
  return active;
}

}  // namespace dpkmeans
