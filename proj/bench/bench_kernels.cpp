// Timing comparison between the OpenMP kernels and their serial reference
// implementations on simulator-sized inputs.

#include <chrono>
#include <cstdio>
#include <functional>

#include <omp.h>

#include "eyoc/features.hpp"
#include "eyoc/lidar_sim.hpp"
#include "eyoc/scpcr.hpp"
#include "eyoc/selflabel.hpp"

using namespace eyoc;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps = 5) {
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

void row(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-24s %10.2f ms %10.2f ms %8.2fx\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms);
}

}  // namespace

int main() {
  SceneConfig scene_cfg;
  scene_cfg.num_landmarks = 800;
  scene_cfg.seed = 7;
  const Scene scene = generate_scene(scene_cfg);
  const DensityModel model;
  const Pose pose_a = Pose::identity();
  Pose pose_b;
  pose_b.translation = Eigen::Vector3d(8.0, 0.0, 0.0);
  const PointCloud cloud_a = scan(scene, pose_a, model, 7, 0);
  const PointCloud cloud_b = scan(scene, pose_b, model, 7, 1);
  std::printf("clouds: %zu / %zu points, %d threads\n", cloud_a.size(), cloud_b.size(),
              omp_get_max_threads());
  std::printf("%-24s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  row("describe",
      time_ms([&] { serial::describe(cloud_a); }),
      time_ms([&] { describe(cloud_a); }));

  const EmbeddingParams params = EmbeddingParams::random_init(32, 1);
  const FeatureMap f_a = embed(describe(cloud_a), params);
  const FeatureMap f_b = embed(describe(cloud_b), params);
  row("match_features",
      time_ms([&] { serial::match_features(f_a, f_b); }),
      time_ms([&] { match_features(f_a, f_b); }));

  const CorrespondenceSet corr = match_features(f_a, f_b);
  CorrespondenceSet sub(corr.begin(), corr.begin() + std::min<std::size_t>(600, corr.size()));
  row("first_order",
      time_ms([&] { serial::first_order(sub, cloud_a, cloud_b, 0.6); }),
      time_ms([&] { first_order(sub, cloud_a, cloud_b, 0.6); }));

  const CompatibilityMatrix binary = first_order(sub, cloud_a, cloud_b, 0.6);
  row("sc2",
      time_ms([&] { serial::sc2(binary); }),
      time_ms([&] { sc2(binary); }));

  Pose est;
  est.translation = pose_b.translation;
  row("rediscover",
      time_ms([&] { serial::rediscover(cloud_a, cloud_b, inverse(est), 2.0); }),
      time_ms([&] { rediscover(cloud_a, cloud_b, inverse(est), 2.0); }));
  return 0;
}
