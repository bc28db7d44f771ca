#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "eyoc/geom.hpp"

namespace eyoc {

/// Frame-interval bound schedule for the progressive dataset.
struct IntervalSchedule {
  int b_start = 1;
  int b_end = 30;
  int total_epochs = 200;
  int step_size = 1;
};

struct PairSample {
  int src_frame = 0;
  int dst_frame = 0;
  int interval = 0;
  std::optional<Pose> true_pose;  // relative pose src -> dst frame, eval only
};

/// Ordered sequence of point-cloud files with optional ground-truth poses.
/// Clouds load lazily and cache. Pose reads are counted so unsupervised
/// training can be audited against label leakage.
class SequenceStore {
 public:
  SequenceStore() = default;
  SequenceStore(SequenceStore&& other) noexcept
      : source_(std::move(other.source_)),
        files_(std::move(other.files_)),
        stride_(other.stride_),
        poses_(std::move(other.poses_)),
        cache_(std::move(other.cache_)),
        pose_reads_(other.pose_reads_.load()) {}
  SequenceStore& operator=(SequenceStore&& other) noexcept {
    source_ = std::move(other.source_);
    files_ = std::move(other.files_);
    stride_ = other.stride_;
    poses_ = std::move(other.poses_);
    cache_ = std::move(other.cache_);
    pose_reads_.store(other.pose_reads_.load());
    return *this;
  }

  static SequenceStore ingest(const std::string& path, int stride = 3);

  std::size_t num_frames() const { return files_.size(); }
  bool has_poses() const { return !poses_.empty(); }
  const PointCloud& cloud(int frame) const;
  const std::string& source() const { return source_; }

  /// Relative pose taking frame src coordinates into frame dst coordinates.
  Pose relative_pose(int src, int dst) const;
  const Pose& absolute_pose(int frame) const;
  long pose_reads() const { return pose_reads_.load(); }

  void drop_poses() { poses_.clear(); }

 private:
  std::string source_;
  std::vector<std::string> files_;
  int stride_ = 3;
  std::vector<Pose> poses_;
  mutable std::vector<std::unique_ptr<PointCloud>> cache_;
  mutable std::atomic<long> pose_reads_{0};
};

/// Piecewise-constant non-decreasing frame-interval bound B(epoch).
int bound_at(const IntervalSchedule& schedule, int epoch);

/// Uniform interval in [1, B] (clamped to the sequence length), uniform source
/// frame. Never touches pose data.
PairSample sample_progressive(const SequenceStore& store, int bound, std::mt19937_64& rng);

/// Pair with inter-LiDAR distance in [d_min, d_max]; ground-truth pose attached.
PairSample sample_traditional(const SequenceStore& store, double d_min, double d_max,
                              std::mt19937_64& rng);

/// All (src, dst) frame pairs whose inter-LiDAR distance lies in [d_min, d_max].
std::vector<PairSample> pairs_in_range(const SequenceStore& store, double d_min, double d_max);

}  // namespace eyoc
