#pragma once

#include <Eigen/Dense>
#include <vector>

#include "eyoc/errors.hpp"

namespace eyoc {

using Point3 = Eigen::Vector3d;

/// Ordered set of 3D points in the sensor frame (LiDAR center at origin).
struct PointCloud {
  std::vector<Point3> points;
  int frame_id = 0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Rigid transform. Rotation is a proper orthonormal 3x3 matrix.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  bool is_valid(double tol = 1e-9) const;
};

/// Index pairs (a into source, b into target) with optional similarity score.
struct Correspondence {
  int src = 0;
  int dst = 0;
  double score = 0.0;
};
using CorrespondenceSet = std::vector<Correspondence>;

PointCloud apply_pose(const PointCloud& cloud, const Pose& pose);
Point3 apply_pose(const Point3& p, const Pose& pose);

/// Returns b after a: result.act(p) == b.act(a.act(p)).
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

/// Weighted Kabsch/Umeyama. Throws DegenerateConfiguration when the
/// weighted covariance is rank-deficient (collinear or coincident points).
Pose fit_pose_weighted(const std::vector<Point3>& src,
                       const std::vector<Point3>& dst,
                       const std::vector<double>& weights);

/// Geodesic rotation distance in degrees, range [0, 180].
double rotation_error(const Eigen::Matrix3d& r_true, const Eigen::Matrix3d& r_est);

double translation_error(const Eigen::Vector3d& t_true, const Eigen::Vector3d& t_est);

/// Rotation by angle (radians) about a unit axis.
Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double angle_rad);

}  // namespace eyoc
