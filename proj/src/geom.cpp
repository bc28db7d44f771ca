#include "eyoc/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace eyoc {

bool Pose::is_valid(double tol) const {
  const Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(rotation.determinant() - 1.0) > tol) return false;
  return translation.allFinite();
}

Point3 apply_pose(const Point3& p, const Pose& pose) {
  return pose.rotation * p + pose.translation;
}

PointCloud apply_pose(const PointCloud& cloud, const Pose& pose) {
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.points.push_back(apply_pose(p, pose));
  return out;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = b.rotation * a.rotation;
  out.translation = b.rotation * a.translation + b.translation;
  return out;
}

Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -(out.rotation * p.translation);
  return out;
}

Pose fit_pose_weighted(const std::vector<Point3>& src,
                       const std::vector<Point3>& dst,
                       const std::vector<double>& weights) {
  if (src.size() != dst.size() || src.size() != weights.size())
    throw ShapeMismatch("fit_pose_weighted: size mismatch");
  if (src.size() < 3) throw DegenerateConfiguration("fit_pose_weighted: need >= 3 pairs");

  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw DegenerateConfiguration("fit_pose_weighted: negative weight");
    wsum += w;
  }
  if (wsum <= 0.0) throw DegenerateConfiguration("fit_pose_weighted: zero total weight");

  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d dst_mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    src_mean += weights[i] * src[i];
    dst_mean += weights[i] * dst[i];
  }
  src_mean /= wsum;
  dst_mean /= wsum;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i)
    cov += weights[i] * (dst[i] - dst_mean) * (src[i] - src_mean).transpose();
  cov /= wsum;

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d& sv = svd.singularValues();
  // Coplanar point sets give a rank-2 covariance, which the reflection
  // correction below still handles; only collinear sets are underdetermined.
  if (sv(1) < 1e-9 * sv(0) || sv(0) < 1e-300)
    throw DegenerateConfiguration("fit_pose_weighted: collinear point set");

  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;

  Pose out;
  out.rotation = svd.matrixU() * d * svd.matrixV().transpose();
  out.translation = dst_mean - out.rotation * src_mean;
  return out;
}

double rotation_error(const Eigen::Matrix3d& r_true, const Eigen::Matrix3d& r_est) {
  double c = ((r_true.transpose() * r_est).trace() - 1.0) / 2.0;
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

double translation_error(const Eigen::Vector3d& t_true, const Eigen::Vector3d& t_est) {
  return (t_true - t_est).norm();
}

Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

}  // namespace eyoc
