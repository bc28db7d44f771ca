#include "eyoc/lidar_sim.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "eyoc/io.hpp"

namespace eyoc {

namespace {

std::mt19937_64 keyed_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{seed, a, b};
  return std::mt19937_64(seq);
}

// Two unit vectors spanning the plane orthogonal to n.
void plane_basis(const Eigen::Vector3d& n, Eigen::Vector3d& u, Eigen::Vector3d& v) {
  const Eigen::Vector3d axis =
      std::abs(n.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  u = n.cross(axis).normalized();
  v = n.cross(u).normalized();
}

}  // namespace

Scene generate_scene(const SceneConfig& config) {
  const Eigen::Vector3d span = config.extent_max - config.extent_min;
  if ((span.array() <= 0.0).any()) throw ConfigError("generate_scene: non-positive extent");
  Scene scene;
  scene.extent_min = config.extent_min;
  scene.extent_max = config.extent_max;
  scene.seed = config.seed;
  auto rng = keyed_rng(config.seed, 0x5ce4eULL, 0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (config.cluster_size_min < 1 || config.cluster_size_max < config.cluster_size_min)
    throw ConfigError("generate_scene: invalid cluster size range");
  std::uniform_int_distribution<int> cluster_size(config.cluster_size_min,
                                                  config.cluster_size_max);
  scene.landmarks.reserve(config.num_landmarks);
  for (int i = 0; i < config.num_landmarks; ++i) {
    Eigen::Vector3d centre;
    for (int k = 0; k < 3; ++k) centre(k) = config.extent_min(k) + u01(rng) * span(k);
    const int members = cluster_size(rng);
    for (int m = 0; m < members; ++m) {
      Landmark lm;
      lm.center = centre;
      if (m > 0) {
        const Eigen::Vector3d offset(u01(rng) - 0.5, u01(rng) - 0.5, (u01(rng) - 0.5) * 0.5);
        lm.center += offset * 2.0 * config.cluster_radius_m;
      }
      lm.extent_m =
          config.min_extent_m + u01(rng) * (config.max_extent_m - config.min_extent_m);
      // Random normal, biased toward vertical like ground/facade mixes.
      Eigen::Vector3d n(u01(rng) - 0.5, u01(rng) - 0.5, u01(rng));
      lm.normal = n.norm() > 1e-12 ? n.normalized() : Eigen::Vector3d::UnitZ();
      scene.landmarks.push_back(lm);
    }
  }
  return scene;
}

Trajectory generate_trajectory(const TrajectoryConfig& config) {
  if (config.num_frames < 1) throw ConfigError("generate_trajectory: need >= 1 frame");
  if (config.speed_m_per_frame > config.max_step_m)
    throw ConfigError("generate_trajectory: speed exceeds max step");
  Trajectory traj;
  traj.poses.reserve(config.num_frames);
  Eigen::Vector3d position = config.start;
  double yaw = 0.0;
  for (int i = 0; i < config.num_frames; ++i) {
    Pose p;
    p.rotation = axis_angle(Eigen::Vector3d::UnitZ(), yaw);
    p.translation = position;
    traj.poses.push_back(p);
    position += p.rotation * Eigen::Vector3d(config.speed_m_per_frame, 0.0, 0.0);
    yaw += config.yaw_rate_rad_per_frame;
  }
  return traj;
}

PointCloud scan(const Scene& scene, const Pose& sensor_pose, const DensityModel& model,
                std::uint64_t seed, int frame_id) {
  PointCloud cloud;
  cloud.frame_id = frame_id;
  const Pose world_to_sensor = inverse(sensor_pose);
  for (std::size_t li = 0; li < scene.landmarks.size(); ++li) {
    const Landmark& lm = scene.landmarks[li];
    const double d = (lm.center - sensor_pose.translation).norm();
    const double area = std::numbers::pi * lm.extent_m * lm.extent_m;
    const double mean = model.density_at(d) * area;
    if (mean <= 0.0) continue;
    auto rng = keyed_rng(seed, static_cast<std::uint64_t>(frame_id), li);
    std::poisson_distribution<int> count_dist(mean);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, model.jitter_sigma_m);
    const int count = count_dist(rng);
    Eigen::Vector3d u, v;
    plane_basis(lm.normal, u, v);
    for (int k = 0; k < count; ++k) {
      const double r = lm.extent_m * std::sqrt(u01(rng));
      const double theta = 2.0 * std::numbers::pi * u01(rng);
      Point3 world = lm.center + r * std::cos(theta) * u + r * std::sin(theta) * v;
      world += Eigen::Vector3d(jitter(rng), jitter(rng), jitter(rng));
      cloud.points.push_back(apply_pose(world, world_to_sensor));
    }
  }
  return cloud;
}

double delta_density(const Point3& p, const Point3& old_center, const Point3& new_center,
                     double alpha) {
  const double d_old2 = (p - old_center).squaredNorm();
  const double d_new2 = (p - new_center).squaredNorm();
  if (d_old2 == 0.0 || d_new2 == 0.0)
    throw CoincidentPoint("delta_density: point coincides with a LiDAR center");
  return alpha / d_new2 - alpha / d_old2;
}

void emit_sequence(const Scene& scene, const Trajectory& traj, const DensityModel& model,
                   const std::string& dir, std::uint64_t seed) {
  if (traj.poses.empty()) throw EmptyInput("emit_sequence: empty trajectory");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir);
  for (std::size_t i = 0; i < traj.poses.size(); ++i) {
    const PointCloud cloud = scan(scene, traj.poses[i], model, seed, static_cast<int>(i));
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06zu.bin", i);
    write_cloud_bin(cloud, (fs::path(dir) / name).string());
  }
  write_pose_file(traj.poses, (fs::path(dir) / "poses.txt").string());
}

}  // namespace eyoc
