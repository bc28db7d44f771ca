#include "eyoc/selflabel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "eyoc/kdtree.hpp"

namespace eyoc {

EmbeddingParams ema_update(const EmbeddingParams& labeler, const EmbeddingParams& student,
                           const EmaConfig& cfg) {
  if (!labeler.same_shape(student)) throw ShapeMismatch("ema_update: shape mismatch");
  if (cfg.lambda < 0.0 || cfg.lambda >= 1.0) throw ConfigError("ema_update: lambda outside [0,1)");
  EmbeddingParams out;
  out.weight = cfg.lambda * labeler.weight + (1.0 - cfg.lambda) * student.weight;
  out.bias = cfg.lambda * labeler.bias + (1.0 - cfg.lambda) * student.bias;
  return out;
}

std::vector<double> lowe_weights(const FeatureMap& f_s, const FeatureMap& f_t,
                                 const CorrespondenceSet& corr) {
  if (f_t.size() < 2) throw SingleCandidate("lowe_weights: target has < 2 features");
  std::vector<double> out(corr.size());
  const int n = static_cast<int>(corr.size());
  for (const auto& c : corr) {
    if (c.src < 0 || c.src >= f_s.size() || c.dst < 0 || c.dst >= f_t.size())
      throw OutOfRange("lowe_weights: index out of range");
  }
#pragma omp parallel for schedule(static)
  for (int c = 0; c < n; ++c) {
    const int i = corr[c].src;
    const int j = corr[c].dst;
    const double d_best = (f_s.rows.row(i) - f_t.rows.row(j)).norm();
    double d_second = std::numeric_limits<double>::infinity();
    for (int k = 0; k < f_t.size(); ++k) {
      if (k == j) continue;
      const double d = (f_s.rows.row(i) - f_t.rows.row(k)).norm();
      d_second = std::min(d_second, d);
    }
    out[c] = d_second > 1e-12 ? std::max(0.0, 1.0 - d_best / d_second) : 0.0;
  }
  return out;
}

int SimilarityMap::bin_of(double d) {
  const int b = static_cast<int>(d / kBinWidth);
  return std::clamp(b, 0, kBins - 1);
}

void SimilarityMap::record(double d1, double d2, double similarity) {
  const int i = bin_of(d1);
  const int j = bin_of(d2);
  sum_[i][j] += similarity;
  ++count_[i][j];
}

double SimilarityMap::mean_at(int i, int j) const {
  if (count_[i][j] == 0) return 0.0;
  return sum_[i][j] / count_[i][j];
}

long SimilarityMap::count_at(int i, int j) const { return count_[i][j]; }

long SimilarityMap::total_count() const {
  long total = 0;
  for (int i = 0; i < kBins; ++i)
    for (int j = 0; j < kBins; ++j) total += count_[i][j];
  return total;
}

double SimilarityMap::lookup(double d1, double d2) const {
  const int i = bin_of(d1);
  const int j = bin_of(d2);
  if (count_[i][j] > 0) return mean_at(i, j);
  // Nearest populated cell by Manhattan grid distance, lowest (i,j) on ties.
  int best_i = -1, best_j = -1, best_dist = std::numeric_limits<int>::max();
  for (int a = 0; a < kBins; ++a)
    for (int b = 0; b < kBins; ++b) {
      if (count_[a][b] == 0) continue;
      const int dist = std::abs(a - i) + std::abs(b - j);
      if (dist < best_dist) {
        best_dist = dist;
        best_i = a;
        best_j = b;
      }
    }
  if (best_i < 0) throw InsufficientData("SimilarityMap::lookup: map is empty");
  return mean_at(best_i, best_j);
}

void SimilarityMap::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "d1_bin,d2_bin,mean_sim,count\n";
  char buf[128];
  for (int i = 0; i < kBins; ++i)
    for (int j = 0; j < kBins; ++j) {
      if (count_[i][j] == 0) continue;
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%ld\n", i, j, mean_at(i, j), count_[i][j]);
      out << buf;
    }
  if (!out) throw IoError("write failed: " + path);
}

SimilarityMap SimilarityMap::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  SimilarityMap map;
  std::string line;
  if (!std::getline(in, line) || line.rfind("d1_bin,", 0) != 0)
    throw MalformedFile(path + ": missing similarity map header");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int i, j;
    double mean;
    long count;
    char comma;
    if (!(ss >> i >> comma >> j >> comma >> mean >> comma >> count))
      throw MalformedFile(path + ": bad row at line " + std::to_string(lineno));
    if (i < 0 || i >= kBins || j < 0 || j >= kBins)
      throw MalformedFile(path + ": bin out of range at line " + std::to_string(lineno));
    map.sum_[i][j] = mean * count;
    map.count_[i][j] = count;
  }
  return map;
}

CorrespondenceSet spatial_filter(const CorrespondenceSet& corr, const PointCloud& src,
                                 const PointCloud& dst, const FilterConfig& cfg,
                                 const SimilarityMap* map) {
  if (cfg.mode == FilterMode::adaptive && map == nullptr)
    throw ConfigError("spatial_filter: adaptive mode requires a similarity map");
  CorrespondenceSet out;
  out.reserve(corr.size());
  for (const auto& c : corr) {
    if (c.src < 0 || c.src >= static_cast<int>(src.size()) || c.dst < 0 ||
        c.dst >= static_cast<int>(dst.size()))
      throw OutOfRange("spatial_filter: index out of range");
    const double d1 = src.points[c.src].norm();
    const double d2 = dst.points[c.dst].norm();
    bool keep = true;
    switch (cfg.mode) {
      case FilterMode::none:
        break;
      case FilterMode::hard:
        keep = std::min(d1, d2) >= cfg.d_thresh_m;
        break;
      case FilterMode::adaptive:
        keep = map->lookup(d1, d2) > cfg.s_thresh;
        break;
    }
    if (keep) out.push_back(c);
  }
  if (out.empty()) throw AllFiltered("spatial_filter: no correspondence survived");
  return out;
}

namespace {

template <bool Parallel>
CorrespondenceSet nn_within(const PointCloud& query, const KdTree& target_tree, double beta) {
  const int n = static_cast<int>(query.size());
  std::vector<int> match(n, -1);
  std::vector<double> dist(n, 0.0);
#pragma omp parallel for schedule(static) if (Parallel)
  for (int i = 0; i < n; ++i) {
    double d;
    const int j = target_tree.nearest(query.points[i], &d);
    if (j >= 0 && d < beta) {
      match[i] = j;
      dist[i] = d;
    }
  }
  CorrespondenceSet out;
  for (int i = 0; i < n; ++i) {
    if (match[i] >= 0) out.push_back({i, match[i], dist[i]});
  }
  return out;
}

template <bool Parallel>
std::pair<CorrespondenceSet, CorrespondenceSet> rediscover_impl(const PointCloud& src,
                                                                const PointCloud& dst,
                                                                const Pose& est_pose,
                                                                double beta_inlier) {
  if (src.empty() || dst.empty()) return {};
  const PointCloud aligned = apply_pose(src, est_pose);
  const KdTree dst_tree(dst.points);
  const KdTree src_tree(aligned.points);
  CorrespondenceSet c_st = nn_within<Parallel>(aligned, dst_tree, beta_inlier);
  CorrespondenceSet c_ts = nn_within<Parallel>(dst, src_tree, beta_inlier);
  return {std::move(c_st), std::move(c_ts)};
}

}  // namespace

std::pair<CorrespondenceSet, CorrespondenceSet> rediscover(const PointCloud& src,
                                                           const PointCloud& dst,
                                                           const Pose& est_pose,
                                                           double beta_inlier) {
  if (!est_pose.is_valid(1e-6)) throw ConfigError("rediscover: invalid pose");
  return rediscover_impl<true>(src, dst, est_pose, beta_inlier);
}

namespace serial {
std::pair<CorrespondenceSet, CorrespondenceSet> rediscover(const PointCloud& src,
                                                           const PointCloud& dst,
                                                           const Pose& est_pose,
                                                           double beta_inlier) {
  return rediscover_impl<false>(src, dst, est_pose, beta_inlier);
}
}  // namespace serial

SimilarityMap build_similarity_map(const std::vector<SimilarityMapSample>& pairs,
                                   const EmbeddingParams& labeler,
                                   const DescriptorConfig& desc_cfg, double nn_tolerance) {
  SimilarityMap map;
  for (const auto& sample : pairs) {
    const PointCloud& src = *sample.src;
    const PointCloud& dst = *sample.dst;
    const FeatureMap f_s = embed(describe(src, desc_cfg), labeler);
    const FeatureMap f_t = embed(describe(dst, desc_cfg), labeler);
    // Ground-truth correspondences: true-pose NN within tolerance.
    const PointCloud aligned = apply_pose(src, sample.true_pose);
    const KdTree dst_tree(dst.points);
    for (int i = 0; i < static_cast<int>(src.size()); ++i) {
      double d;
      const int j = dst_tree.nearest(aligned.points[i], &d);
      if (j < 0 || d > nn_tolerance) continue;
      const double sim = f_s.rows.row(i).dot(f_t.rows.row(j));
      map.record(src.points[i].norm(), dst.points[j].norm(), sim);
    }
  }
  return map;
}

LabelSet generate_labels(const PointCloud& src, const PointCloud& dst, int interval,
                         const EmbeddingParams& labeler, const FilterConfig& filter_cfg,
                         const RegistrarConfig& registrar_cfg, const SimilarityMap* map,
                         const DescriptorConfig& desc_cfg, double beta_inlier) {
  LabelSet labels;
  if (interval == 1) {
    // Consecutive frames: assume identity transformation, supervise directly.
    labels.est_pose = Pose::identity();
    auto [c_st, c_ts] = rediscover(src, dst, labels.est_pose, beta_inlier);
    labels.c_st = std::move(c_st);
    labels.c_ts = std::move(c_ts);
    labels.diagnostics.rediscovered_st = static_cast<int>(labels.c_st.size());
    labels.diagnostics.rediscovered_ts = static_cast<int>(labels.c_ts.size());
    if (labels.c_st.empty() || labels.c_ts.empty())
      throw SkipPair("generate_labels: consecutive frames share no overlap");
    return labels;
  }

  const FeatureMap f_s = embed(describe(src, desc_cfg), labeler);
  const FeatureMap f_t = embed(describe(dst, desc_cfg), labeler);
  CorrespondenceSet corr = match_features(f_s, f_t);
  labels.diagnostics.matched = static_cast<int>(corr.size());

  if (filter_cfg.lowe_enabled) {
    const auto weights = lowe_weights(f_s, f_t, corr);
    CorrespondenceSet kept;
    for (std::size_t i = 0; i < corr.size(); ++i)
      if (weights[i] >= filter_cfg.lowe_thresh) kept.push_back(corr[i]);
    corr = std::move(kept);
    if (corr.empty()) throw SkipPair("generate_labels: Lowe filter removed everything");
  }
  labels.diagnostics.after_lowe = static_cast<int>(corr.size());

  try {
    corr = spatial_filter(corr, src, dst, filter_cfg, map);
  } catch (const AllFiltered& e) {
    throw SkipPair(e.what());
  }
  labels.diagnostics.after_spatial = static_cast<int>(corr.size());

  RegistrationOutput reg;
  try {
    reg = register_sc2pcr(corr, src, dst, registrar_cfg);
  } catch (const TooFewCorrespondences& e) {
    throw SkipPair(e.what());
  } catch (const RegistrationFailed& e) {
    throw SkipPair(e.what());
  }
  labels.est_pose = reg.pose;
  labels.diagnostics.registrar_inliers = reg.confidence;

  auto [c_st, c_ts] = rediscover(src, dst, labels.est_pose, beta_inlier);
  labels.c_st = std::move(c_st);
  labels.c_ts = std::move(c_ts);
  labels.diagnostics.rediscovered_st = static_cast<int>(labels.c_st.size());
  labels.diagnostics.rediscovered_ts = static_cast<int>(labels.c_ts.size());
  if (labels.c_st.empty() || labels.c_ts.empty())
    throw SkipPair("generate_labels: rediscovery found no correspondences");
  return labels;
}

}  // namespace eyoc
