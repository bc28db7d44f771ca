#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eyoc/geom.hpp"

namespace eyoc {

struct MetricThresholds {
  double t_rot_deg = 5.0;
  double t_trans_m = 2.0;
  double t_inlier_m = 0.3;
};

struct RegistrationResult {
  std::string pair_id;
  double re_deg = 0.0;
  double te_m = 0.0;
  bool success = false;
};

/// Meter intervals (d1, d2) over inter-LiDAR distance.
struct DistanceBuckets {
  std::vector<std::pair<double, double>> intervals;
  static DistanceBuckets v2v() {
    return {{{5, 10}, {10, 20}, {20, 30}, {30, 40}, {40, 50}}};
  }
};

struct AggregateResult {
  double rr = 0.0;
  std::optional<double> rre_deg;  // undefined when no pair succeeded
  std::optional<double> rte_m;
  int total = 0;
  int successes = 0;
};

RegistrationResult evaluate_pair(const Pose& true_pose, const Pose& est_pose,
                                 const MetricThresholds& thresholds,
                                 const std::string& pair_id = "");

AggregateResult aggregate(const std::vector<RegistrationResult>& results);

/// Arithmetic mean over per-bucket RR values (one per bucket).
double mean_rr(const std::vector<double>& bucketed_rr, const DistanceBuckets& buckets);

/// Fraction of correspondences within t_inlier of their ground-truth-transformed
/// counterpart (non-strict threshold).
double inlier_ratio(const PointCloud& src, const PointCloud& dst, const Pose& true_pose,
                    const CorrespondenceSet& corr, double t_inlier);

}  // namespace eyoc
