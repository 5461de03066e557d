#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dynsurf {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Pinhole camera model. depth_scale is the divisor turning raw 16-bit depth
/// units into meters (TUM convention: 5000).
struct Intrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;
  double depth_scale = 5000.0;

  bool valid() const { return fx > 0 && fy > 0 && width > 0 && height > 0 && depth_scale > 0; }

  /// Intrinsics of pyramid level l (each level halves the resolution).
  Intrinsics level(int l) const {
    Intrinsics k = *this;
    const double s = 1.0 / double(1 << l);
    k.fx = fx * s;
    k.fy = fy * s;
    // Pixel-center convention: pixel (0,0) sits at the center of the
    // top-left sample, so the principal point shifts by half a pixel.
    k.cx = (cx + 0.5) * s - 0.5;
    k.cy = (cy + 0.5) * s - 0.5;
    k.width = width >> l;
    k.height = height >> l;
    return k;
  }
};

/// Rigid transform in SE(3). Maps points from the source frame into the
/// target frame: x_target = R * x_source + t.
struct Pose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  Pose inverse() const { return {R.transpose(), -(R.transpose() * t)}; }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return R * p + t; }

  friend Pose operator*(const Pose& a, const Pose& b) { return {a.R * b.R, a.R * b.t + a.t}; }

  /// Re-projects R onto SO(3); composition chains stay orthonormal.
  void orthonormalize();

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = R;
    m.topRightCorner<3, 1>() = t;
    return m;
  }
};

/// Tangent-space element of SE(3). Vector layout is [v; omega]
/// (translational part first).
struct Twist {
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d v = Eigen::Vector3d::Zero();

  static Twist from_vector(const Vector6d& x) { return {x.tail<3>(), x.head<3>()}; }
  Vector6d to_vector() const {
    Vector6d x;
    x.head<3>() = v;
    x.tail<3>() = omega;
    return x;
  }
  double norm() const { return to_vector().norm(); }
};

Eigen::Matrix3d skew(const Eigen::Vector3d& v);
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega);
Eigen::Vector3d so3_log(const Eigen::Matrix3d& R);

/// Exponential map se(3) -> SE(3) (Rodrigues rotation plus the V-matrix
/// applied to the translational part).
Pose se3_exp(const Twist& xi);

/// Logarithm map, inverse of se3_exp for |omega| < pi.
Twist se3_log(const Pose& T);

/// Pinhole back-projection. Returns the camera-space point for pixel (u,v)
/// at depth d; d must be positive (callers gate on the valid mask).
inline Eigen::Vector3d backproject(double u, double v, double d, const Intrinsics& K) {
  return {(u - K.cx) * d / K.fx, (v - K.cy) * d / K.fy, d};
}

/// Projects a camera-space point to pixel coordinates. p.z() must be > 0.
inline Eigen::Vector2d project(const Eigen::Vector3d& p, const Intrinsics& K) {
  return {K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy};
}

}  // namespace dynsurf
