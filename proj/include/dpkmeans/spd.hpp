#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "dpkmeans/common.hpp"

namespace dpkmeans {

/// Relative eigenvalue clamp: anything below -kPsdClampTol * lambda_max is
/// treated as genuinely indefinite rather than floating-point noise.
inline constexpr double kPsdClampTol = 1e-10;
inline constexpr double kDefaultRankTol = 1e-10;

/// Symmetric matrix value type. The constructor symmetrizes by averaging with
/// the transpose, so downstream eigendecompositions always see an exactly
/// symmetric operand.
template <typename Scalar>
class SymMatrixT {
 public:
  SymMatrixT() = default;

  explicit SymMatrixT(const Mat<Scalar>& m) {
    if (m.rows() != m.cols()) {
      throw DimensionError("SymMatrix: input must be square");
    }
    m_ = ((m + m.transpose()) / Scalar(2)).eval();
  }

  static SymMatrixT Identity(Index n) { return SymMatrixT(Mat<Scalar>::Identity(n, n).eval()); }

  static SymMatrixT FromDiagonal(const Vec<Scalar>& d) {
    return SymMatrixT(Mat<Scalar>(d.asDiagonal()));
  }

  static SymMatrixT Zero(Index n) { return SymMatrixT(Mat<Scalar>::Zero(n, n).eval()); }

  Index dim() const { return m_.rows(); }
  const Mat<Scalar>& matrix() const { return m_; }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }
  Scalar trace() const { return m_.trace(); }

  /// Quadratic form v' M v.
  template <typename Derived>
  Scalar quad(const Eigen::MatrixBase<Derived>& v) const {
    return v.dot(m_ * v);
  }

 private:
  Mat<Scalar> m_;
};

using SymMatrix = SymMatrixT<double>;

namespace detail {

template <typename Scalar>
std::pair<Mat<Scalar>, Vec<Scalar>> sym_eig(const SymMatrixT<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(m.matrix());
  if (es.info() != Eigen::Success) {
    throw Error("eigendecomposition failed to converge");
  }
  return {es.eigenvectors(), es.eigenvalues()};
}

}  // namespace detail

/// Principal square root of a PSD matrix. Eigenvalues in
/// [-kPsdClampTol * lambda_max, 0) are clamped to zero; anything lower throws.
template <typename Scalar>
SymMatrixT<Scalar> mat_sqrt(const SymMatrixT<Scalar>& m) {
  auto [vecs, vals] = detail::sym_eig(m);
  const Scalar lmax = vals.size() > 0 ? vals.maxCoeff() : Scalar(0);
  const Scalar floor = -kPsdClampTol * std::max(lmax, Scalar(0));
  for (Index i = 0; i < vals.size(); ++i) {
    if (vals[i] < floor) {
      throw NotPsdError("mat_sqrt: eigenvalue " + std::to_string(vals[i]) +
                        " below PSD tolerance");
    }
    vals[i] = vals[i] > Scalar(0) ? std::sqrt(vals[i]) : Scalar(0);
  }
  return SymMatrixT<Scalar>(
      (vecs * vals.asDiagonal() * vecs.transpose()).eval());
}

/// Inverse square root of an SPD matrix. Requires full rank: any eigenvalue
/// at or below rank_tol * lambda_max is rejected.
template <typename Scalar>
SymMatrixT<Scalar> mat_inv_sqrt(const SymMatrixT<Scalar>& m,
                                double rank_tol = kDefaultRankTol) {
  auto [vecs, vals] = detail::sym_eig(m);
  const Scalar lmax = vals.size() > 0 ? vals.maxCoeff() : Scalar(0);
  if (lmax <= Scalar(0)) {
    throw SingularMatrixError("mat_inv_sqrt: matrix has no positive spectrum");
  }
  const Scalar floor = -kPsdClampTol * lmax;
  const Scalar cutoff = rank_tol * lmax;
  for (Index i = 0; i < vals.size(); ++i) {
    if (vals[i] < floor) {
      throw NotPsdError("mat_inv_sqrt: eigenvalue " + std::to_string(vals[i]) +
                        " below PSD tolerance");
    }
    if (vals[i] <= cutoff) {
      throw SingularMatrixError("mat_inv_sqrt: eigenvalue " +
                                std::to_string(vals[i]) +
                                " below rank tolerance");
    }
    vals[i] = Scalar(1) / std::sqrt(vals[i]);
  }
  return SymMatrixT<Scalar>(
      (vecs * vals.asDiagonal() * vecs.transpose()).eval());
}

/// SPD inverse through the same eigendecomposition path as mat_inv_sqrt.
template <typename Scalar>
SymMatrixT<Scalar> spd_inverse(const SymMatrixT<Scalar>& m,
                               double rank_tol = kDefaultRankTol) {
  auto [vecs, vals] = detail::sym_eig(m);
  const Scalar lmax = vals.size() > 0 ? vals.maxCoeff() : Scalar(0);
  if (lmax <= Scalar(0)) {
    throw SingularMatrixError("spd_inverse: matrix has no positive spectrum");
  }
  const Scalar cutoff = rank_tol * lmax;
  for (Index i = 0; i < vals.size(); ++i) {
    if (vals[i] <= cutoff) {
      throw SingularMatrixError("spd_inverse: eigenvalue " +
                                std::to_string(vals[i]) +
                                " below rank tolerance");
    }
    vals[i] = Scalar(1) / vals[i];
  }
  return SymMatrixT<Scalar>(
      (vecs * vals.asDiagonal() * vecs.transpose()).eval());
}

/// Factor F with F F' = cov, for sampling N(0, cov) as F z. Uses the
/// eigendecomposition factor U sqrt(Lambda); small negative eigenvalues are
/// clamped like in mat_sqrt. For the identity this returns the identity, so a
/// unit-covariance colored draw consumes the normal stream exactly like a
/// white draw.
template <typename Scalar>
Mat<Scalar> cov_factor(const SymMatrixT<Scalar>& cov) {
  auto [vecs, vals] = detail::sym_eig(cov);
  const Scalar lmax = vals.size() > 0 ? vals.maxCoeff() : Scalar(0);
  const Scalar floor = -kPsdClampTol * std::max(lmax, Scalar(0));
  for (Index i = 0; i < vals.size(); ++i) {
    if (vals[i] < floor) {
      throw NotPsdError("cov_factor: eigenvalue " + std::to_string(vals[i]) +
                        " below PSD tolerance");
    }
    vals[i] = vals[i] > Scalar(0) ? std::sqrt(vals[i]) : Scalar(0);
  }
  return (vecs * vals.asDiagonal()).eval();
}

}  // namespace dpkmeans
