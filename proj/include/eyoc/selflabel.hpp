#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eyoc/features.hpp"
#include "eyoc/geom.hpp"
#include "eyoc/scpcr.hpp"

namespace eyoc {

struct EmaConfig {
  double lambda = 0.2;  // decay in [0, 1)
};

/// Mean feature cosine similarity binned over point-to-LiDAR distances
/// (d1, d2). 2 m bins over [0, 100]^2.
class SimilarityMap {
 public:
  static constexpr double kBinWidth = 2.0;
  static constexpr double kRange = 100.0;
  static constexpr int kBins = 50;

  void record(double d1, double d2, double similarity);
  double mean_at(int i, int j) const;
  long count_at(int i, int j) const;
  static int bin_of(double d);

  /// Cell mean at (d1, d2); empty cells fall back to the nearest populated
  /// cell by Manhattan grid distance. Throws InsufficientData when the whole
  /// map is empty.
  double lookup(double d1, double d2) const;

  void save_csv(const std::string& path) const;
  static SimilarityMap load_csv(const std::string& path);

  long total_count() const;

 private:
  double sum_[kBins][kBins] = {};
  long count_[kBins][kBins] = {};
};

enum class FilterMode { none, hard, adaptive };

struct FilterConfig {
  FilterMode mode = FilterMode::hard;
  double d_thresh_m = 40.0;
  double s_thresh = 0.6;
  bool lowe_enabled = false;  // deteriorates IR on LiDAR data, kept as option
  double lowe_thresh = 0.3;
};

struct LabelDiagnostics {
  int matched = 0;
  int after_lowe = 0;
  int after_spatial = 0;
  int rediscovered_st = 0;
  int rediscovered_ts = 0;
  int registrar_inliers = 0;
};

struct LabelSet {
  CorrespondenceSet c_st;  // (i in S, j in T)
  CorrespondenceSet c_ts;  // (j in T, i in S)
  Pose est_pose;
  LabelDiagnostics diagnostics;
};

/// labeler <- lambda * labeler + (1 - lambda) * student, elementwise.
EmbeddingParams ema_update(const EmbeddingParams& labeler, const EmbeddingParams& student,
                           const EmaConfig& cfg);

/// Lowe significance per correspondence: 1 - d_best / d_secondbest on feature
/// distances. Throws SingleCandidate when the target has fewer than 2 features.
std::vector<double> lowe_weights(const FeatureMap& f_s, const FeatureMap& f_t,
                                 const CorrespondenceSet& corr);

/// Hard: keep a pair iff min(|p|, |q|) >= d_thresh. Adaptive: keep iff the
/// similarity-map cell mean exceeds s_thresh. Throws AllFiltered when nothing
/// survives.
CorrespondenceSet spatial_filter(const CorrespondenceSet& corr, const PointCloud& src,
                                 const PointCloud& dst, const FilterConfig& cfg,
                                 const SimilarityMap* map = nullptr);

/// Dense NN correspondences within beta_inlier after aligning with est_pose.
/// Returns (C_ST, C_TS); either may be empty.
std::pair<CorrespondenceSet, CorrespondenceSet> rediscover(const PointCloud& src,
                                                           const PointCloud& dst,
                                                           const Pose& est_pose,
                                                           double beta_inlier = 2.0);

namespace serial {
std::pair<CorrespondenceSet, CorrespondenceSet> rediscover(const PointCloud& src,
                                                           const PointCloud& dst,
                                                           const Pose& est_pose,
                                                           double beta_inlier = 2.0);
}  // namespace serial

/// Builds the (d1, d2) similarity surface from ground-truth correspondences of
/// supervised pretraining pairs. `pairs` supplies (src cloud, dst cloud,
/// true pose) tuples; features come from the labeler parameters.
struct SimilarityMapSample {
  const PointCloud* src;
  const PointCloud* dst;
  Pose true_pose;
};
SimilarityMap build_similarity_map(const std::vector<SimilarityMapSample>& pairs,
                                   const EmbeddingParams& labeler,
                                   const DescriptorConfig& desc_cfg = {},
                                   double nn_tolerance = 0.3);

/// Full label-generation pass: match, optional Lowe, spatial filter,
/// speculative registration, rediscovery. Interval 1 bypasses matching and
/// uses the identity pose. Filtering or registration failure surfaces as
/// SkipPair.
LabelSet generate_labels(const PointCloud& src, const PointCloud& dst, int interval,
                         const EmbeddingParams& labeler, const FilterConfig& filter_cfg,
                         const RegistrarConfig& registrar_cfg,
                         const SimilarityMap* map = nullptr,
                         const DescriptorConfig& desc_cfg = {}, double beta_inlier = 2.0);

}  // namespace eyoc
