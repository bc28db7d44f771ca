#include "eyoc/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "eyoc/io.hpp"

namespace eyoc {

namespace fs = std::filesystem;

SequenceStore SequenceStore::ingest(const std::string& path, int stride) {
  SequenceStore store;
  store.source_ = path;
  store.stride_ = stride;
  if (!fs::is_directory(path)) throw IoError("ingest: not a directory: " + path);
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.path().extension() == ".bin") store.files_.push_back(entry.path().string());
  }
  std::sort(store.files_.begin(), store.files_.end());
  if (store.files_.empty()) throw IoError("ingest: no .bin frames in " + path);
  const fs::path pose_path = fs::path(path) / "poses.txt";
  if (fs::exists(pose_path)) {
    store.poses_ = read_pose_file(pose_path.string());
    if (store.poses_.size() != store.files_.size())
      throw MalformedFile(pose_path.string() + ": pose count does not match frame count");
  }
  store.cache_.resize(store.files_.size());
  return store;
}

const PointCloud& SequenceStore::cloud(int frame) const {
  if (frame < 0 || frame >= static_cast<int>(files_.size()))
    throw OutOfRange("cloud: frame index out of range");
  auto& slot = cache_[frame];
  if (!slot) {
    slot = std::make_unique<PointCloud>(read_cloud_bin(files_[frame], stride_));
    slot->frame_id = frame;
  }
  return *slot;
}

const Pose& SequenceStore::absolute_pose(int frame) const {
  if (poses_.empty()) throw EmptyInput("absolute_pose: store has no poses");
  if (frame < 0 || frame >= static_cast<int>(poses_.size()))
    throw OutOfRange("absolute_pose: frame index out of range");
  pose_reads_.fetch_add(1, std::memory_order_relaxed);
  return poses_[frame];
}

Pose SequenceStore::relative_pose(int src, int dst) const {
  // src sensor frame -> world -> dst sensor frame
  return compose(absolute_pose(src), inverse(absolute_pose(dst)));
}

int bound_at(const IntervalSchedule& schedule, int epoch) {
  if (schedule.b_start > schedule.b_end || schedule.step_size < 1 || schedule.total_epochs < 1)
    throw ConfigError("bound_at: invalid schedule");
  if (epoch < 0 || epoch >= schedule.total_epochs)
    throw OutOfRange("bound_at: epoch outside [0, total_epochs)");
  const int span = schedule.b_end - schedule.b_start;
  const int increments = (span + schedule.step_size - 1) / schedule.step_size;
  const long raw = schedule.b_start +
                   static_cast<long>(schedule.step_size) *
                       (static_cast<long>(epoch) * (increments + 1) / schedule.total_epochs);
  return static_cast<int>(std::min<long>(raw, schedule.b_end));
}

PairSample sample_progressive(const SequenceStore& store, int bound, std::mt19937_64& rng) {
  const int n = static_cast<int>(store.num_frames());
  if (n < 2) throw SequenceTooShort("sample_progressive: need >= 2 frames");
  const int max_interval = std::min(bound, n - 1);
  std::uniform_int_distribution<int> interval_dist(1, max_interval);
  const int interval = interval_dist(rng);
  std::uniform_int_distribution<int> src_dist(0, n - 1 - interval);
  PairSample s;
  s.src_frame = src_dist(rng);
  s.dst_frame = s.src_frame + interval;
  s.interval = interval;
  return s;
}

std::vector<PairSample> pairs_in_range(const SequenceStore& store, double d_min, double d_max) {
  if (!store.has_poses()) throw EmptyInput("pairs_in_range: store has no poses");
  std::vector<PairSample> out;
  const int n = static_cast<int>(store.num_frames());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Pose rel = store.relative_pose(i, j);
      const double d = rel.translation.norm();
      if (d >= d_min && d <= d_max) {
        PairSample s;
        s.src_frame = i;
        s.dst_frame = j;
        s.interval = j - i;
        s.true_pose = rel;
        out.push_back(s);
      }
    }
  }
  return out;
}

PairSample sample_traditional(const SequenceStore& store, double d_min, double d_max,
                              std::mt19937_64& rng) {
  const auto pairs = pairs_in_range(store, d_min, d_max);
  if (pairs.empty())
    throw NoPairInRange("sample_traditional: no pair with distance in [" +
                        std::to_string(d_min) + ", " + std::to_string(d_max) + "]");
  std::uniform_int_distribution<std::size_t> dist(0, pairs.size() - 1);
  return pairs[dist(rng)];
}

}  // namespace eyoc
