#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eyoc/dataset.hpp"
#include "eyoc/metrics.hpp"
#include "eyoc/selflabel.hpp"

namespace eyoc {

struct TrainConfig {
  std::vector<std::string> dataset_dirs;
  int stride = 3;
  IntervalSchedule schedule;
  FilterConfig filter;
  LossConfig loss;
  EmaConfig ema;
  RegistrarConfig registrar;
  DescriptorConfig descriptor;
  int embedding_dim = 32;
  double beta_inlier = 2.0;
  int pairs_per_epoch = 0;  // 0: one pass over frame indices
  int max_label_pairs = 1024;  // rediscovered labels fed to the loss, per direction
  int checkpoint_every = 10;
  std::uint64_t seed = 0;
  std::string out_dir = "run";
  std::string map_path;     // similarity map for adaptive filtering
  bool measure_ir = false;  // labeler IR diagnostic, needs ground-truth poses
  bool verbose = false;
};

struct EpochReport {
  int epoch = 0;
  int bound = 0;
  int attempted = 0;
  int skipped = 0;
  double loss_mean = 0.0;
  std::optional<double> labeler_ir;
  double wall_time_s = 0.0;  // console diagnostic, excluded from report files

  std::string to_json() const;  // deterministic, no wall time
};

struct TrainResult {
  EmbeddingParams student;
  EmbeddingParams labeler;
  std::vector<EpochReport> reports;
  long pose_reads = 0;
  std::string checkpoint_path;
};

TrainResult train(const TrainConfig& cfg);

enum class Estimator { sc2pcr, ransac };

struct EvalConfig {
  std::vector<std::string> dataset_dirs;
  int stride = 3;
  DistanceBuckets buckets = DistanceBuckets::v2v();
  Estimator estimator = Estimator::sc2pcr;
  int pairs_per_bucket = 20;
  MetricThresholds thresholds;
  RegistrarConfig registrar;
  DescriptorConfig descriptor;
  int ransac_iters = 2000;
  std::uint64_t seed = 0;
};

struct BucketReport {
  double d_min = 0.0;
  double d_max = 0.0;
  int pairs = 0;
  double rr = 0.0;
  std::optional<double> rre_deg;
  std::optional<double> rte_m;
  double mean_ir = 0.0;
};

struct EvalReport {
  std::vector<BucketReport> buckets;
  double mrr = 0.0;           // renormalized over populated buckets
  int populated_buckets = 0;
  double mean_ir = 0.0;

  std::string to_json() const;
  std::string to_csv() const;  // one row per bucket
};

EvalReport evaluate(const EmbeddingParams& student, const EvalConfig& cfg);

/// Single-pair inference: describe, embed, match, register.
RegistrationOutput register_pair(const PointCloud& src, const PointCloud& dst,
                                 const EmbeddingParams& params, const EvalConfig& cfg);

/// Builds the similarity map from interval-limited pairs of a supervised
/// sequence set, mirroring the schedule-matched pretraining recording.
SimilarityMap build_filter_map(const std::vector<std::string>& dataset_dirs, int stride,
                               const EmbeddingParams& labeler, const DescriptorConfig& desc_cfg,
                               int max_interval, int pairs, std::uint64_t seed);

}  // namespace eyoc
