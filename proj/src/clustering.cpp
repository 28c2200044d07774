#include "dpkmeans/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dpkmeans/rng.hpp"

namespace dpkmeans {

Dataset::Dataset(Matrix pts, std::vector<std::string> names)
    : points(std::move(pts)), feature_names(std::move(names)) {
  if (points.rows() < 1 || points.cols() < 1) {
    throw DimensionError("Dataset: need at least one point and one feature");
  }
  if (!points.allFinite()) {
    throw DegenerateDataError("Dataset: non-finite entries");
  }
  if (feature_names.empty()) {
    feature_names.reserve(points.cols());
    for (Index j = 0; j < points.cols(); ++j) {
      feature_names.push_back("f" + std::to_string(j));
    }
  }
  if (static_cast<Index>(feature_names.size()) != points.cols()) {
    throw DimensionError("Dataset: feature_names size does not match d");
  }
}

Partition Partition::FromLabels(std::vector<int> labels, int k) {
  if (k < 1) throw DimensionError("Partition: k must be >= 1");
  Partition part;
  part.k = k;
  part.counts.assign(k, 0);
  for (int label : labels) {
    if (label < 0 || label >= k) {
      throw DimensionError("Partition: label out of range");
    }
    ++part.counts[label];
  }
  part.labels = std::move(labels);
  return part;
}

CentroidSet CentroidSet::FromFlat(const Vector& flat, Index k, Index d) {
  if (flat.size() != k * d) {
    throw DimensionError("CentroidSet: flat vector size != K*d");
  }
  Matrix c(k, d);
  for (Index i = 0; i < k; ++i) c.row(i) = flat.segment(i * d, d).transpose();
  return CentroidSet(std::move(c));
}

Vector CentroidSet::flattened() const {
  Vector flat(k() * dim());
  for (Index i = 0; i < k(); ++i) {
    flat.segment(i * dim(), dim()) = centroids.row(i).transpose();
  }
  return flat;
}

namespace {

Index nearest_centroid(const Matrix& points, Index p, const Matrix& cents) {
  Index best = 0;
  double best_d = (points.row(p) - cents.row(0)).squaredNorm();
  for (Index c = 1; c < cents.rows(); ++c) {
    const double d = (points.row(p) - cents.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

Index count_distinct_rows(const Matrix& points) {
  std::vector<Index> order(points.rows());
  std::iota(order.begin(), order.end(), Index(0));
  auto row_less = [&](Index a, Index b) {
    for (Index j = 0; j < points.cols(); ++j) {
      if (points(a, j) != points(b, j)) return points(a, j) < points(b, j);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), row_less);
  Index distinct = points.rows() > 0 ? 1 : 0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (row_less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

Matrix kmeanspp_init(const Matrix& points, int k, Rng& rng) {
  const Index p = points.rows();
  Matrix cents(k, points.cols());
  cents.row(0) = points.row(static_cast<Index>(rng.index(p)));
  Vector min_d2 = (points.rowwise() - cents.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = min_d2.sum();
    Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      double acc = 0.0;
      for (Index i = 0; i < p; ++i) {
        acc += min_d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = static_cast<Index>(rng.index(p));
    }
    cents.row(c) = points.row(pick);
    min_d2 = min_d2.cwiseMin(
        (points.rowwise() - cents.row(c)).rowwise().squaredNorm());
  }
  return cents;
}

struct LloydRun {
  std::vector<int> labels;
  Matrix centroids;
  double objective;
  std::vector<double> trace;
};

LloydRun lloyd(const Matrix& points, int k, std::uint64_t seed,
               const KMeansOptions& opt) {
  const Index p = points.rows();
  const Index d = points.cols();
  Rng rng(seed);
  Matrix cents = kmeanspp_init(points, k, rng);

  std::vector<int> labels(p, 0);
  std::vector<Index> counts(k, 0);
  LloydRun run;
  double prev_obj = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    std::fill(counts.begin(), counts.end(), Index(0));
    for (Index i = 0; i < p; ++i) {
      labels[i] = static_cast<int>(nearest_centroid(points, i, cents));
      ++counts[labels[i]];
    }

    // Empty-cluster repair: reseed from the point farthest from its current
    // centroid, taken from a cluster that can spare it.
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      Index far = -1;
      double far_d = -1.0;
      for (Index i = 0; i < p; ++i) {
        if (counts[labels[i]] < 2) continue;
        const double dist =
            (points.row(i) - cents.row(labels[i])).squaredNorm();
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      if (far < 0) {
        throw EmptyClusterError("kmeans: empty cluster could not be repaired");
      }
      --counts[labels[far]];
      labels[far] = c;
      ++counts[c];
      cents.row(c) = points.row(far);
    }

    Matrix sums = Matrix::Zero(k, d);
    for (Index i = 0; i < p; ++i) sums.row(labels[i]) += points.row(i);
    for (int c = 0; c < k; ++c) {
      cents.row(c) = sums.row(c) / static_cast<double>(counts[c]);
    }

    double obj = 0.0;
    for (Index i = 0; i < p; ++i) {
      obj += (points.row(i) - cents.row(labels[i])).squaredNorm();
    }
    obj /= static_cast<double>(p);
    run.trace.push_back(obj);

    if (prev_obj < std::numeric_limits<double>::infinity()) {
      const double rel =
          (prev_obj - obj) / std::max(prev_obj, std::numeric_limits<double>::min());
      // rel < 0 only after an empty-cluster repair; keep iterating then.
      if (rel >= 0.0 && rel < opt.tol) {
        prev_obj = obj;
        break;
      }
    }
    prev_obj = obj;
  }

  run.labels = std::move(labels);
  run.centroids = std::move(cents);
  run.objective = prev_obj;
  return run;
}

}  // namespace

KMeansResult kmeans(const Dataset& data, int k, std::uint64_t seed,
                    const KMeansOptions& options) {
  const Index p = data.num_points();
  if (k <= 1 || static_cast<Index>(k) > p) {
    throw ValidationError("kmeans: require 1 < K <= P");
  }
  if (options.max_iter < 1 || options.tol <= 0 || options.restarts < 1) {
    throw ValidationError("kmeans: invalid options");
  }
  if (static_cast<Index>(k) > count_distinct_rows(data.points)) {
    throw DegenerateDataError("kmeans: K exceeds number of distinct points");
  }

  LloydRun best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    LloydRun run = lloyd(data.points, k, derive_seed(seed, r), options);
    if (run.objective < best.objective) best = std::move(run);
  }

  KMeansResult result;
  result.partition = Partition::FromLabels(std::move(best.labels), k);
  result.centroids = CentroidSet(std::move(best.centroids));
  result.objective = best.objective;
  result.objective_trace = std::move(best.trace);
  return result;
}

double clustering_objective(const Dataset& data, const CentroidSet& cents) {
  if (cents.dim() != data.dim()) {
    throw DimensionError("clustering_objective: dimension mismatch");
  }
  double obj = 0.0;
  for (Index i = 0; i < data.num_points(); ++i) {
    obj += (data.points.row(i) -
            cents.centroids.row(nearest_centroid(data.points, i, cents.centroids)))
               .squaredNorm();
  }
  return obj / static_cast<double>(data.num_points());
}

std::vector<std::pair<int, double>> elbow_scan(const Dataset& data, int k_min,
                                               int k_max, std::uint64_t seed,
                                               const KMeansOptions& options) {
  if (k_min < 1 || k_max < k_min ||
      static_cast<Index>(k_max) > data.num_points()) {
    throw ValidationError("elbow_scan: k range must lie within [1, P]");
  }
  std::vector<std::pair<int, double>> curve;
  for (int k = k_min; k <= k_max; ++k) {
    if (k == 1) {
      Matrix mean = data.points.colwise().mean();
      curve.emplace_back(
          1, (data.points.rowwise() - mean.row(0)).rowwise().squaredNorm().sum() /
                 static_cast<double>(data.num_points()));
    } else {
      curve.emplace_back(k, kmeans(data, k, derive_seed(seed, k), options).objective);
    }
  }
  return curve;
}

int select_elbow(const std::vector<std::pair<int, double>>& curve) {
  if (curve.empty()) throw ValidationError("select_elbow: empty curve");
  int best_k = curve.front().first;
  double best_drop = -1.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double prev = curve[i - 1].second;
    if (prev <= 0.0) continue;
    const double drop = (prev - curve[i].second) / prev;
    if (drop > best_drop) {
      best_drop = drop;
      best_k = curve[i].first;
    }
  }
  return best_k;
}

Partition relabel_nearest(const Dataset& data, const CentroidSet& cents) {
  if (cents.dim() != data.dim()) {
    throw DimensionError("relabel_nearest: centroid dimension mismatch");
  }
  std::vector<int> labels(data.num_points());
  for (Index i = 0; i < data.num_points(); ++i) {
    labels[i] = static_cast<int>(nearest_centroid(data.points, i, cents.centroids));
  }
  return Partition::FromLabels(std::move(labels), static_cast<int>(cents.k()));
}

}  // namespace dpkmeans
