#pragma once

// Rotation group SO(3) and its Lie algebra so(3).
//
// Everything here is templated on the scalar type and works on fixed-size
// Eigen types. Rotations are wrapped in a small value type that carries the
// group invariant; skew matrices are stored by their axial vector.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "so3me/errors.hpp"

namespace so3me {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

/// Tolerance on ||R^T R - I||_F accepted by Rotation::from_matrix.
inline constexpr double kRotationTolerance = 1e-9;
/// Below this rotation-vector norm exp_so3 switches to Taylor coefficients.
inline constexpr double kSmallAngle = 1e-4;
/// Relative asymmetry accepted when a raw matrix is read as skew.
inline constexpr double kSkewTolerance = 1e-12;

/// Element of so(3), stored as its three independent entries.
template <typename Scalar>
class Skew {
 public:
  Skew() : axial_(Vector3<Scalar>::Zero()) {}
  explicit Skew(const Vector3<Scalar>& axial) : axial_(axial) {}

  /// Reads a raw 3x3 matrix. Throws NotSkew if M + M^T is not zero to
  /// kSkewTolerance relative to the largest entry of M.
  static Skew from_matrix(const Matrix3<Scalar>& M) {
    using std::abs;
    const Scalar scale = std::max(Scalar(1), M.cwiseAbs().maxCoeff());
    const Scalar asym = (M + M.transpose()).cwiseAbs().maxCoeff();
    if (!(asym <= Scalar(kSkewTolerance) * scale)) {
      std::ostringstream os;
      os << "matrix is not skew-symmetric (max |M + M^T| = " << asym << ")";
      throw NotSkew(os.str());
    }
    return Skew(Vector3<Scalar>(M(2, 1) - M(1, 2), M(0, 2) - M(2, 0), M(1, 0) - M(0, 1)) /
                Scalar(2));
  }

  const Vector3<Scalar>& axial() const { return axial_; }

  Matrix3<Scalar> matrix() const {
    Matrix3<Scalar> M;
    M << Scalar(0), -axial_.z(), axial_.y(),
         axial_.z(), Scalar(0), -axial_.x(),
         -axial_.y(), axial_.x(), Scalar(0);
    return M;
  }

  /// hat(v) * w = v x w
  Vector3<Scalar> operator*(const Vector3<Scalar>& w) const { return axial_.cross(w); }

 private:
  Vector3<Scalar> axial_;
};

/// Element of SO(3). Construction from an arbitrary matrix is validated;
/// products of valid rotations are trusted and may drift by roundoff, so
/// long-running consumers call renormalized() periodically.
template <typename Scalar>
class Rotation {
 public:
  using MatrixType = Matrix3<Scalar>;

  Rotation() : R_(MatrixType::Identity()) {}

  static Rotation identity() { return Rotation(); }

  /// Throws NotNearGroup unless ||M^T M - I||_F <= tol and det(M) > 0.
  static Rotation from_matrix(const MatrixType& M, Scalar tol = Scalar(kRotationTolerance)) {
    const Scalar err = orthogonality_error(M);
    if (!(err <= tol) || !(M.determinant() > Scalar(0))) {
      std::ostringstream os;
      os << "matrix is not a rotation (||M^T M - I||_F = " << err
         << ", det = " << M.determinant() << ")";
      throw NotNearGroup(os.str());
    }
    return Rotation(M);
  }

  /// Wraps a matrix the caller guarantees is a rotation (exp, products).
  static Rotation unchecked(const MatrixType& M) { return Rotation(M); }

  const MatrixType& matrix() const { return R_; }
  Scalar operator()(Eigen::Index r, Eigen::Index c) const { return R_(r, c); }

  Rotation inverse() const { return Rotation(R_.transpose()); }
  Rotation transpose() const { return inverse(); }

  Rotation operator*(const Rotation& other) const { return Rotation(R_ * other.R_); }
  Vector3<Scalar> operator*(const Vector3<Scalar>& v) const { return R_ * v; }

  Scalar orthogonality_error() const { return orthogonality_error(R_); }
  bool is_valid(Scalar tol = Scalar(kRotationTolerance)) const {
    return orthogonality_error() <= tol && R_.determinant() > Scalar(0);
  }

  /// Nearest rotation to the stored matrix (removes accumulated drift).
  Rotation renormalized() const;

  static Scalar orthogonality_error(const MatrixType& M) {
    return (M.transpose() * M - MatrixType::Identity()).norm();
  }

 private:
  explicit Rotation(const MatrixType& M) : R_(M) {}

  MatrixType R_;
};

using Skew3d = Skew<double>;
using Rotation3d = Rotation<double>;
using Vector3d = Vector3<double>;
using Matrix3d = Matrix3<double>;

template <typename Scalar>
Skew<Scalar> hat(const Vector3<Scalar>& v) {
  return Skew<Scalar>(v);
}

template <typename Scalar>
Vector3<Scalar> vex(const Skew<Scalar>& M) {
  return M.axial();
}

/// vex of a raw matrix; throws NotSkew when M is not skew.
template <typename Derived>
Vector3<typename Derived::Scalar> vex(const Eigen::MatrixBase<Derived>& M) {
  return Skew<typename Derived::Scalar>::from_matrix(M).axial();
}

/// Rodrigues' formula. Coefficients sin(t)/t and (1 - cos t)/t^2 switch to
/// their Taylor expansions below kSmallAngle.
template <typename Scalar>
Rotation<Scalar> exp_so3(const Vector3<Scalar>& v) {
  using std::sin;
  using std::sqrt;
  const Scalar theta2 = v.squaredNorm();
  const Scalar theta = sqrt(theta2);
  Scalar a;
  Scalar b;
  if (theta < Scalar(kSmallAngle)) {
    a = Scalar(1) - theta2 / Scalar(6);
    b = Scalar(0.5) - theta2 / Scalar(24);
  } else {
    const Scalar s = sin(theta / Scalar(2));
    a = sin(theta) / theta;
    b = Scalar(2) * s * s / theta2;
  }
  const Matrix3<Scalar> K = hat(v).matrix();
  return Rotation<Scalar>::unchecked(Matrix3<Scalar>::Identity() + a * K + b * (K * K));
}

/// Rotation angle of R in [0, pi], evaluated with atan2 so it keeps full
/// relative accuracy near 0 and pi. Equal to acos((trace(R) - 1) / 2).
template <typename Scalar>
Scalar principal_angle(const Rotation<Scalar>& R) {
  using std::atan2;
  const Matrix3<Scalar>& M = R.matrix();
  const Vector3<Scalar> w(M(2, 1) - M(1, 2), M(0, 2) - M(2, 0), M(1, 0) - M(0, 1));
  const Scalar c = std::clamp((M.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  return atan2(w.norm() / Scalar(2), c);
}

/// Rotation vector of R with angle in [0, pi]. At exactly pi the axis is
/// taken from the largest diagonal entry of (R + I)/2 and signed so its first
/// nonzero component is positive.
template <typename Scalar>
Vector3<Scalar> log_so3(const Rotation<Scalar>& R) {
  using std::sin;
  using std::sqrt;
  const Matrix3<Scalar>& M = R.matrix();
  const Vector3<Scalar> w(M(2, 1) - M(1, 2), M(0, 2) - M(2, 0), M(1, 0) - M(0, 1));
  const Scalar phi = principal_angle(R);
  const Scalar c = std::clamp((M.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));

  if (c > Scalar(-0.9)) {
    // w = 2 sin(phi) * axis
    if (phi < Scalar(kSmallAngle)) {
      return w / Scalar(2) * (Scalar(1) + phi * phi / Scalar(6));
    }
    return w * (phi / (Scalar(2) * sin(phi)));
  }

  // Near pi: (R + R^T)/2 = cos(phi) I + (1 - cos(phi)) a a^T.
  const Matrix3<Scalar> S = (M + M.transpose()) / Scalar(2);
  const Matrix3<Scalar> aat = (S - c * Matrix3<Scalar>::Identity()) / (Scalar(1) - c);
  Eigen::Index j = 0;
  aat.diagonal().maxCoeff(&j);
  Vector3<Scalar> axis = aat.col(j) / sqrt(aat(j, j));
  axis.normalize();
  if (w.norm() > Scalar(1e-12)) {
    if (axis.dot(w) < Scalar(0)) axis = -axis;
  } else {
    for (Eigen::Index k = 0; k < 3; ++k) {
      if (axis(k) != Scalar(0)) {
        if (axis(k) < Scalar(0)) axis = -axis;
        break;
      }
    }
  }
  return phi * axis;
}

/// Orthogonal polar factor of M with determinant +1. Throws NotNearGroup when
/// M is singular or further than 0.5 (Frobenius) from the group.
template <typename Derived>
Rotation<typename Derived::Scalar> project_to_so3(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  const Matrix3<Scalar> A = M;
  if (!(A.allFinite()) || A.determinant() == Scalar(0)) {
    throw NotNearGroup("cannot project a singular matrix onto SO(3)");
  }
  Eigen::JacobiSVD<Matrix3<Scalar>> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3<Scalar>& U = svd.matrixU();
  const Matrix3<Scalar>& V = svd.matrixV();
  Vector3<Scalar> diag(Scalar(1), Scalar(1), (U * V.transpose()).determinant() < 0 ? -1 : 1);
  const Matrix3<Scalar> P = U * diag.asDiagonal() * V.transpose();
  const Scalar dist = (A - P).norm();
  if (!(dist <= Scalar(0.5))) {
    std::ostringstream os;
    os << "matrix is " << dist << " away from SO(3) (limit 0.5)";
    throw NotNearGroup(os.str());
  }
  return Rotation<Scalar>::unchecked(P);
}

template <typename Scalar>
Rotation<Scalar> Rotation<Scalar>::renormalized() const {
  return project_to_so3(R_);
}

/// Ad_R acting on an axial vector: returns R v, so that
/// hat(R v) = R hat(v) R^T.
template <typename Scalar>
Vector3<Scalar> adjoint_rotate(const Rotation<Scalar>& R, const Vector3<Scalar>& v) {
  return R.matrix() * v;
}

/// Frobenius inner product <A, B> = trace(A^T B).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar trace_inner(const Eigen::MatrixBase<DerivedA>& A,
                                      const Eigen::MatrixBase<DerivedB>& B) {
  return A.cwiseProduct(B).sum();
}

}  // namespace so3me
