#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpkmeans/common.hpp"

namespace dpkmeans {

/// P x d feature matrix plus provenance metadata.
struct Dataset {
  Matrix points;                           // P x d, rows are feature vectors
  std::vector<std::string> feature_names;  // size d

  Dataset() = default;
  Dataset(Matrix pts, std::vector<std::string> names = {});

  Index num_points() const { return points.rows(); }
  Index dim() const { return points.cols(); }
};

/// Cluster assignment: labels in [0, K) plus per-cluster populations.
struct Partition {
  std::vector<int> labels;
  int k = 0;
  std::vector<Index> counts;  // derived from labels, sums to P

  static Partition FromLabels(std::vector<int> labels, int k);
};

/// K x d centroid matrix, also viewable as the flattened length-Kd query
/// vector (row-major by cluster index).
struct CentroidSet {
  Matrix centroids;  // K x d

  CentroidSet() = default;
  explicit CentroidSet(Matrix c) : centroids(std::move(c)) {}
  static CentroidSet FromFlat(const Vector& flat, Index k, Index d);

  Index k() const { return centroids.rows(); }
  Index dim() const { return centroids.cols(); }

  /// flattened[k*d + j] == centroids(k, j)
  Vector flattened() const;
};

struct KMeansOptions {
  int max_iter = 300;
  double tol = 1e-6;  // relative objective decrease
  int restarts = 5;
};

struct KMeansResult {
  Partition partition;
  CentroidSet centroids;
  double objective = 0.0;  // (1/P) sum_p ||x_p - c_label(p)||^2
  std::vector<double> objective_trace;  // per Lloyd iteration, winning restart
};

/// Lloyd's algorithm with k-means++ initialization, best of
/// `options.restarts` independently seeded runs. Deterministic given
/// (data, k, seed, options).
KMeansResult kmeans(const Dataset& data, int k, std::uint64_t seed,
                    const KMeansOptions& options = {});

/// Mean cost (1/P) sum_p min_k ||x_p - c_k||^2 of the nearest-centroid
/// assignment.
double clustering_objective(const Dataset& data, const CentroidSet& cents);

/// Objective curve over k in [k_min, k_max]. k = 1 is the whole-data mean.
std::vector<std::pair<int, double>> elbow_scan(const Dataset& data, int k_min,
                                               int k_max, std::uint64_t seed,
                                               const KMeansOptions& options = {});

/// K at the largest relative objective drop of the curve.
int select_elbow(const std::vector<std::pair<int, double>>& curve);

/// Label every point by its nearest centroid; ties break to the lowest
/// cluster index.
Partition relabel_nearest(const Dataset& data, const CentroidSet& cents);

}  // namespace dpkmeans
