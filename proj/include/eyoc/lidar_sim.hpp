#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eyoc/geom.hpp"

namespace eyoc {

/// Planar surface patch scattering LiDAR returns.
struct Landmark {
  Point3 center;
  double extent_m = 1.0;  // patch radius
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
};

struct Scene {
  std::vector<Landmark> landmarks;
  Eigen::Vector3d extent_min = Eigen::Vector3d::Zero();
  Eigen::Vector3d extent_max = Eigen::Vector3d::Zero();
  std::uint64_t seed = 0;
};

struct SceneConfig {
  int num_landmarks = 500;  // cluster count when clustering is enabled
  Eigen::Vector3d extent_min{-60.0, -60.0, -2.0};
  Eigen::Vector3d extent_max{120.0, 60.0, 8.0};
  double min_extent_m = 0.5;
  double max_extent_m = 2.0;
  // Clustered mode groups patches into compact objects, which gives local
  // neighborhoods a recognizable multi-patch shape signature.
  int cluster_size_min = 1;
  int cluster_size_max = 1;
  double cluster_radius_m = 1.5;
  std::uint64_t seed = 0;
};

/// Surface density sigma(d) = alpha / d^2 inside [min_range, max_range], 0 outside.
struct DensityModel {
  double alpha = 1000.0;     // points * m^2
  double min_range_m = 2.0;  // near region cut off around the LiDAR
  double max_range_m = 100.0;
  double jitter_sigma_m = 0.02;

  double density_at(double d) const {
    if (d < min_range_m || d > max_range_m) return 0.0;
    return alpha / (d * d);
  }
};

struct Trajectory {
  std::vector<Pose> poses;  // sensor-to-world, one per frame
  double frame_period_s = 0.1;
};

struct TrajectoryConfig {
  int num_frames = 31;
  double speed_m_per_frame = 1.7;
  double max_step_m = 5.0;
  double yaw_rate_rad_per_frame = 0.0;
  Eigen::Vector3d start = Eigen::Vector3d::Zero();
};

Scene generate_scene(const SceneConfig& config);

Trajectory generate_trajectory(const TrajectoryConfig& config);

/// One synthetic scan: each landmark contributes Poisson(sigma(d) * area) points
/// with Gaussian surface jitter. Output is in the sensor frame. The RNG stream
/// is keyed by (seed, frame_id, landmark index) so parallel generation is
/// deterministic.
PointCloud scan(const Scene& scene, const Pose& sensor_pose, const DensityModel& model,
                std::uint64_t seed, int frame_id = 0);

/// Signed density change at p when the sensor moves between the two centers.
/// Throws CoincidentPoint when p equals either center.
double delta_density(const Point3& p, const Point3& old_center, const Point3& new_center,
                     double alpha);

/// Writes frame_NNNNNN.bin files plus poses.txt into dir.
void emit_sequence(const Scene& scene, const Trajectory& traj, const DensityModel& model,
                   const std::string& dir, std::uint64_t seed);

}  // namespace eyoc
