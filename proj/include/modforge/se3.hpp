#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace modforge {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;
template <typename Scalar>
using Isometry = Eigen::Transform<Scalar, 3, Eigen::Isometry>;

using Vector3d = Vector3<double>;
using Vector6d = Vector6<double>;
using Matrix3d = Matrix3<double>;
using Matrix4d = Matrix4<double>;
using Isometry3d = Isometry<double>;

enum class JointKind { Revolute, Prismatic };

/// Twist coordinates of a module joint, expressed in its joint frame.
/// Ordered [linear; angular]; the joint always acts along (or about) the
/// joint-frame Z axis.
struct TwistAxis {
  JointKind kind = JointKind::Revolute;

  template <typename Scalar = double>
  Vector6<Scalar> coordinates() const {
    Vector6<Scalar> s = Vector6<Scalar>::Zero();
    if (kind == JointKind::Revolute) {
      s(5) = Scalar(1);
    } else {
      s(2) = Scalar(1);
    }
    return s;
  }

  friend bool operator==(const TwistAxis&, const TwistAxis&) = default;
};

template <typename Derived>
Matrix3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  Matrix3<S> m;
  m << S(0), -v(2), v(1),  //
      v(2), S(0), -v(0),   //
      -v(1), v(0), S(0);
  return m;
}

/// se(3) hat of a [linear; angular] twist.
template <typename Derived>
Matrix4<typename Derived::Scalar> hat(const Eigen::MatrixBase<Derived>& twist) {
  using S = typename Derived::Scalar;
  Matrix4<S> m = Matrix4<S>::Zero();
  m.template topLeftCorner<3, 3>() = skew(twist.template tail<3>());
  m.template topRightCorner<3, 1>() = twist.template head<3>();
  return m;
}

/// Closed-form exponential of a unit joint twist scaled by q.
template <typename Scalar>
Isometry<Scalar> twist_exp(const TwistAxis& axis, Scalar q) {
  Isometry<Scalar> t = Isometry<Scalar>::Identity();
  if (axis.kind == JointKind::Revolute) {
    const Scalar c = std::cos(q);
    const Scalar s = std::sin(q);
    Matrix3<Scalar> r;
    r << c, -s, Scalar(0),  //
        s, c, Scalar(0),    //
        Scalar(0), Scalar(0), Scalar(1);
    t.linear() = r;
  } else {
    t.translation() = Vector3<Scalar>(Scalar(0), Scalar(0), q);
  }
  return t;
}

/// Fixed-axis XYZ roll-pitch-yaw, R = Rz(yaw) * Ry(pitch) * Rx(roll), the
/// URDF `origin` convention.
template <typename Scalar>
Matrix3<Scalar> rpy_to_matrix(const Vector3<Scalar>& rpy) {
  const Scalar cr = std::cos(rpy(0)), sr = std::sin(rpy(0));
  const Scalar cp = std::cos(rpy(1)), sp = std::sin(rpy(1));
  const Scalar cy = std::cos(rpy(2)), sy = std::sin(rpy(2));
  Matrix3<Scalar> r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,  //
      sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,   //
      -sp, cp * sr, cp * cr;
  return r;
}

template <typename Scalar>
Vector3<Scalar> matrix_to_rpy(const Matrix3<Scalar>& r) {
  using std::atan2;
  using std::sqrt;
  const Scalar pitch = atan2(-r(2, 0), sqrt(r(0, 0) * r(0, 0) + r(1, 0) * r(1, 0)));
  if (sqrt(r(0, 0) * r(0, 0) + r(1, 0) * r(1, 0)) < Scalar(1e-12)) {
    // Gimbal lock: fold yaw into roll.
    return {atan2(-r(1, 2), r(1, 1)), pitch, Scalar(0)};
  }
  return {atan2(r(2, 1), r(2, 2)), pitch, atan2(r(1, 0), r(0, 0))};
}

template <typename Scalar>
bool is_rotation(const Matrix3<Scalar>& r, Scalar tol) {
  const Matrix3<Scalar> err = r.transpose() * r - Matrix3<Scalar>::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - Scalar(1)) <= tol;
}

/// A frame offset as stored in the module database and emitted to URDF:
/// translation in meters plus fixed-axis XYZ roll-pitch-yaw in radians.
/// Kept in this form so values pass through to the model files unchanged.
struct Origin {
  Vector3d xyz = Vector3d::Zero();
  Vector3d rpy = Vector3d::Zero();

  Isometry3d isometry() const {
    Isometry3d t = Isometry3d::Identity();
    t.linear() = rpy_to_matrix<double>(rpy);
    t.translation() = xyz;
    return t;
  }

  static Origin from_isometry(const Isometry3d& t) {
    return {t.translation(), matrix_to_rpy<double>(t.linear())};
  }

  bool is_identity() const { return xyz.isZero(0.0) && rpy.isZero(0.0); }

  friend bool operator==(const Origin& a, const Origin& b) {
    return a.xyz == b.xyz && a.rpy == b.rpy;
  }
};

}  // namespace modforge
