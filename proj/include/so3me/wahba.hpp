#pragma once

// Wahba cost, weight construction that fixes the spectrum of K = E W E^T,
// and the attitude gradients S_L / S_K consumed by the estimator.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "so3me/errors.hpp"
#include "so3me/so3.hpp"

namespace so3me {

template <typename Scalar>
using Matrix3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Smallest singular value of E accepted as full rank.
inline constexpr double kRankTolerance = 1e-6;
/// Minimum gap between target eigenvalues.
inline constexpr double kDistinctTolerance = 1e-9;
/// Weight given to the directions beyond the third singular direction.
inline constexpr double kTailWeight = 1e-6;
/// ||u1 x u2|| below which a pair of directions is treated as parallel.
inline constexpr double kParallelTolerance = 1e-6;
inline constexpr double kUnitTolerance = 1e-9;

/// [u1, u2, u1 x u2]; throws DegeneratePair when the pair is nearly parallel.
template <typename Scalar>
Matrix3<Scalar> augment_two_vectors(const Vector3<Scalar>& u1, const Vector3<Scalar>& u2) {
  const Vector3<Scalar> u3 = u1.cross(u2);
  if (!(u3.norm() > Scalar(kParallelTolerance))) {
    std::ostringstream os;
    os << "direction pair is nearly parallel (||u1 x u2|| = " << u3.norm() << ")";
    throw DegeneratePair(os.str());
  }
  Matrix3<Scalar> M;
  M << u1, u2, u3;
  return M;
}

namespace detail {

template <typename Scalar>
Matrix3X<Scalar> augment_if_pair(const Matrix3X<Scalar>& cols) {
  if (cols.cols() == 2) {
    return augment_two_vectors<Scalar>(cols.col(0), cols.col(1));
  }
  return cols;
}

template <typename Scalar>
void require_unit_columns(const Matrix3X<Scalar>& cols, const char* what) {
  for (Eigen::Index j = 0; j < cols.cols(); ++j) {
    using std::abs;
    if (!(abs(cols.col(j).norm() - Scalar(1)) <= Scalar(kUnitTolerance))) {
      std::ostringstream os;
      os << what << " column " << j << " is not unit-norm (norm " << cols.col(j).norm() << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

}  // namespace detail

/// Inertial reference directions as columns. Two observed directions are
/// completed with their cross product, so matrix() always has >= 3 columns.
template <typename Scalar>
class DirectionEnsemble {
 public:
  DirectionEnsemble() = default;

  /// Throws std::invalid_argument for fewer than two or non-unit columns and
  /// DegeneratePair for a parallel pair.
  static DirectionEnsemble from_columns(const Matrix3X<Scalar>& observed) {
    if (observed.cols() < 2) {
      throw std::invalid_argument("at least two inertial directions are required");
    }
    detail::require_unit_columns(observed, "inertial direction");
    DirectionEnsemble out;
    out.E_ = detail::augment_if_pair(observed);
    out.observed_ = observed.cols();
    const Eigen::JacobiSVD<Matrix3X<Scalar>> svd(out.E_);
    out.sigma_min_ = svd.singularValues()(2);
    return out;
  }

  const Matrix3X<Scalar>& matrix() const { return E_; }
  /// Column count after augmentation.
  Eigen::Index size() const { return E_.cols(); }
  /// Directions actually observed (2..k).
  Eigen::Index observed() const { return observed_; }
  bool augmented() const { return observed_ == 2; }
  Scalar smallest_singular_value() const { return sigma_min_; }
  bool full_rank() const { return sigma_min_ > Scalar(kRankTolerance); }

 private:
  Matrix3X<Scalar> E_;
  Eigen::Index observed_ = 0;
  Scalar sigma_min_ = 0;
};

/// Body-frame counterparts of a DirectionEnsemble (U, U^m or propagated U~).
template <typename Scalar>
class BodyVectorSet {
 public:
  BodyVectorSet() = default;

  /// Same augmentation convention as DirectionEnsemble.
  static BodyVectorSet measured(const Matrix3X<Scalar>& observed) {
    if (observed.cols() < 2) {
      throw std::invalid_argument("at least two body directions are required");
    }
    return BodyVectorSet(detail::augment_if_pair(observed), true);
  }

  /// Wraps an already assembled (augmented) matrix.
  static BodyVectorSet from_matrix(const Matrix3X<Scalar>& U, bool fresh) {
    return BodyVectorSet(U, fresh);
  }

  const Matrix3X<Scalar>& matrix() const { return U_; }
  Eigen::Index size() const { return U_.cols(); }
  /// True when measured at this instant, false when propagated.
  bool fresh() const { return fresh_; }

 private:
  BodyVectorSet(Matrix3X<Scalar> U, bool fresh) : U_(std::move(U)), fresh_(fresh) {}

  Matrix3X<Scalar> U_;
  bool fresh_ = false;
};

template <typename Scalar>
struct WeightMatrix {
  MatrixX<Scalar> W;
  Vector3<Scalar> d;
};

/// Symmetric positive-definite K with its eigendecomposition, eigenvalues in
/// descending order. Each eigenvector is signed so its largest-magnitude entry
/// is positive.
template <typename Scalar>
class KMatrix {
 public:
  /// Throws RankDeficient unless K is positive definite.
  static KMatrix from_matrix(const Matrix3<Scalar>& K_in) {
    KMatrix out;
    out.K_ = (K_in + K_in.transpose()) / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Matrix3<Scalar>> eig(out.K_);
    // Eigen returns ascending order.
    for (int i = 0; i < 3; ++i) {
      out.values_(i) = eig.eigenvalues()(2 - i);
      Vector3<Scalar> v = eig.eigenvectors().col(2 - i);
      Eigen::Index j = 0;
      v.cwiseAbs().maxCoeff(&j);
      if (v(j) < Scalar(0)) v = -v;
      out.vectors_.col(i) = v;
    }
    if (!(out.values_(2) > Scalar(0))) {
      std::ostringstream os;
      os << "K is not positive definite (smallest eigenvalue " << out.values_(2) << ")";
      throw RankDeficient(os.str());
    }
    return out;
  }

  const Matrix3<Scalar>& matrix() const { return K_; }
  const Vector3<Scalar>& eigenvalues() const { return values_; }
  const Matrix3<Scalar>& eigenvectors() const { return vectors_; }

  Scalar min_eigen_gap() const {
    using std::abs;
    return std::min({abs(values_(0) - values_(1)), abs(values_(1) - values_(2)),
                     abs(values_(0) - values_(2))});
  }
  bool distinct() const { return min_eigen_gap() >= Scalar(kDistinctTolerance); }

 private:
  Matrix3<Scalar> K_ = Matrix3<Scalar>::Zero();
  Vector3<Scalar> values_ = Vector3<Scalar>::Zero();
  Matrix3<Scalar> vectors_ = Matrix3<Scalar>::Identity();
};

template <typename Scalar>
void require_distinct_positive(const Vector3<Scalar>& d) {
  if (!(d.minCoeff() > Scalar(0))) {
    throw std::invalid_argument("target eigenvalues must be positive");
  }
  using std::abs;
  const Scalar gap = std::min({abs(d(0) - d(1)), abs(d(1) - d(2)), abs(d(0) - d(2))});
  if (!(gap >= Scalar(kDistinctTolerance))) {
    std::ostringstream os;
    os << "target eigenvalues are not distinct (min gap " << gap << ")";
    throw NonDistinct(os.str());
  }
}

/// Weights W = V_E W0 V_E^T with W0 = diag(d1/s1^2, d2/s2^2, d3/s3^2, eps, ...),
/// where E = U_E S_E V_E^T. Then E W E^T = U_E diag(d) U_E^T.
template <typename Scalar>
WeightMatrix<Scalar> construct_weights(const DirectionEnsemble<Scalar>& E,
                                       const Vector3<Scalar>& d) {
  if (!E.full_rank()) {
    std::ostringstream os;
    os << "inertial directions do not span R^3 (sigma_3 = " << E.smallest_singular_value()
       << ")";
    throw RankDeficient(os.str());
  }
  require_distinct_positive(d);

  const Eigen::Index k = E.size();
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(MatrixX<Scalar>(E.matrix()), Eigen::ComputeFullV);
  const auto& sigma = svd.singularValues();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w0 =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(k, Scalar(kTailWeight));
  for (int i = 0; i < 3; ++i) w0(i) = d(i) / (sigma(i) * sigma(i));
  const MatrixX<Scalar>& V = svd.matrixV();
  MatrixX<Scalar> W = V * w0.asDiagonal() * V.transpose();
  W = (W + W.transpose()) / Scalar(2);
  return {W, d};
}

/// K = E W E^T.
template <typename Scalar>
KMatrix<Scalar> k_matrix(const DirectionEnsemble<Scalar>& E, const WeightMatrix<Scalar>& W) {
  if (E.size() != W.W.rows()) {
    throw std::invalid_argument("weight matrix does not match the direction count");
  }
  if (!E.full_rank()) {
    std::ostringstream os;
    os << "inertial directions do not span R^3 (sigma_3 = " << E.smallest_singular_value()
       << ")";
    throw RankDeficient(os.str());
  }
  return KMatrix<Scalar>::from_matrix(E.matrix() * W.W * E.matrix().transpose());
}

/// 1/2 <E - R U, (E - R U) W>.
template <typename Scalar>
Scalar wahba_cost(const Rotation<Scalar>& R_hat, const BodyVectorSet<Scalar>& U,
                  const DirectionEnsemble<Scalar>& E, const WeightMatrix<Scalar>& W) {
  const Matrix3X<Scalar> D = E.matrix() - R_hat.matrix() * U.matrix();
  return trace_inner(D, D * W.W) / Scalar(2);
}

/// <I - Q, K> = trace(K) - trace(Q^T K).
template <typename Scalar>
Scalar potential_error(const Rotation<Scalar>& Q, const KMatrix<Scalar>& K) {
  return K.matrix().trace() - trace_inner(Q.matrix(), K.matrix());
}

/// vex(L^T R - R^T L) with L = E W U~^T. Right-perturbation gradient of the
/// Wahba cost: d/de cost(R exp(e a)) = a . S_L at e = 0.
template <typename Scalar>
Vector3<Scalar> s_l(const Rotation<Scalar>& R_hat, const DirectionEnsemble<Scalar>& E,
                    const WeightMatrix<Scalar>& W, const BodyVectorSet<Scalar>& U_tilde) {
  const Matrix3<Scalar> L = E.matrix() * W.W * U_tilde.matrix().transpose();
  const Matrix3<Scalar> A = L.transpose() * R_hat.matrix();
  return Skew<Scalar>::from_matrix(A - A.transpose()).axial();
}

/// vex(K Q^T - Q K). Left-perturbation gradient:
/// d/de <I - exp(e a) Q, K> = -a . S_K at e = 0.
template <typename Scalar>
Vector3<Scalar> s_k(const Rotation<Scalar>& Q, const KMatrix<Scalar>& K) {
  const Matrix3<Scalar> A = K.matrix() * Q.matrix().transpose();
  return Skew<Scalar>::from_matrix(A - A.transpose()).axial();
}

/// {I, Q1, Q2, Q3} with Qi = 2 u_i u_i^T - I, u_i the i-th eigenvector of K.
template <typename Scalar>
std::array<Rotation<Scalar>, 4> critical_points(const KMatrix<Scalar>& K) {
  if (!K.distinct()) {
    std::ostringstream os;
    os << "K has repeated eigenvalues (min gap " << K.min_eigen_gap() << ")";
    throw NonDistinct(os.str());
  }
  std::array<Rotation<Scalar>, 4> out;
  out[0] = Rotation<Scalar>::identity();
  for (int i = 0; i < 3; ++i) {
    const Vector3<Scalar> u = K.eigenvectors().col(i);
    out[i + 1] = Rotation<Scalar>::from_matrix(Scalar(2) * u * u.transpose() -
                                               Matrix3<Scalar>::Identity());
  }
  return out;
}

}  // namespace so3me
