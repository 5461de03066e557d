#include "dynsurf/geometry.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace dynsurf {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  // clang-format off
  s <<     0, -v.z(),  v.y(),
       v.z(),      0, -v.x(),
      -v.y(),  v.x(),      0;
  // clang-format on
  return s;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  const Eigen::Matrix3d W = skew(omega);
  if (theta < 1e-10) {
    return Eigen::Matrix3d::Identity() + W + 0.5 * W * W;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + a * W + b * W * W;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
  const double cos_theta = std::min(1.0, std::max(-1.0, (R.trace() - 1.0) * 0.5));
  const double theta = std::acos(cos_theta);
  Eigen::Vector3d w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (theta < 1e-10) {
    return 0.5 * w;
  }
  if (theta > M_PI - 1e-6) {
    // Near pi the antisymmetric part vanishes; recover the axis from the
    // symmetric part R = I + (1-cos)*K^2 + ...
    Eigen::Matrix3d S = 0.5 * (R + Eigen::Matrix3d::Identity());
    Eigen::Vector3d axis = S.diagonal().cwiseMax(0.0).cwiseSqrt();
    // Fix signs using the largest component.
    int k = 0;
    axis.maxCoeff(&k);
    for (int i = 0; i < 3; ++i) {
      if (i != k && S(k, i) < 0) axis[i] = -axis[i];
    }
    if (axis.norm() < 1e-12) return Eigen::Vector3d::Zero();
    axis.normalize();
    if (w.dot(axis) < 0) axis = -axis;
    return theta * axis;
  }
  return (theta / (2.0 * std::sin(theta))) * w;
}

Pose se3_exp(const Twist& xi) {
  const double theta = xi.omega.norm();
  const Eigen::Matrix3d W = skew(xi.omega);
  Pose T;
  T.R = so3_exp(xi.omega);
  Eigen::Matrix3d V;
  if (theta < 1e-10) {
    V = Eigen::Matrix3d::Identity() + 0.5 * W + (1.0 / 6.0) * W * W;
  } else {
    const double t2 = theta * theta;
    const double b = (1.0 - std::cos(theta)) / t2;
    const double c = (theta - std::sin(theta)) / (t2 * theta);
    V = Eigen::Matrix3d::Identity() + b * W + c * W * W;
  }
  T.t = V * xi.v;
  return T;
}

Twist se3_log(const Pose& T) {
  Twist xi;
  xi.omega = so3_log(T.R);
  const double theta = xi.omega.norm();
  const Eigen::Matrix3d W = skew(xi.omega);
  Eigen::Matrix3d V_inv;
  if (theta < 1e-10) {
    V_inv = Eigen::Matrix3d::Identity() - 0.5 * W + (1.0 / 12.0) * W * W;
  } else {
    const double half = 0.5 * theta;
    const double cot_half = std::cos(half) / std::sin(half);
    const double a = (1.0 - 0.5 * theta * cot_half) / (theta * theta);
    V_inv = Eigen::Matrix3d::Identity() - 0.5 * W + a * W * W;
  }
  xi.v = V_inv * T.t;
  return xi;
}

void Pose::orthonormalize() {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0) {
    Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
    D(2, 2) = -1;
    R = svd.matrixU() * D * svd.matrixV().transpose();
  }
}

}  // namespace dynsurf
