#include "eyoc/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace eyoc {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string opt_json(const std::optional<double>& v) { return v ? fmt(*v) : "null"; }

CorrespondenceSet subsample_corr(const CorrespondenceSet& corr, int cap, std::mt19937_64& rng) {
  if (static_cast<int>(corr.size()) <= cap) return corr;
  std::vector<int> idx(corr.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  for (int i = 0; i < cap; ++i) {
    std::uniform_int_distribution<int> dist(i, static_cast<int>(idx.size()) - 1);
    std::swap(idx[i], idx[dist(rng)]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  CorrespondenceSet out;
  out.reserve(cap);
  for (int i : idx) out.push_back(corr[i]);
  return out;
}

}  // namespace

std::string EpochReport::to_json() const {
  std::ostringstream os;
  os << "{\"epoch\":" << epoch << ",\"B\":" << bound << ",\"attempted\":" << attempted
     << ",\"skipped\":" << skipped << ",\"loss_mean\":" << fmt(loss_mean)
     << ",\"labeler_ir\":" << opt_json(labeler_ir) << "}";
  return os.str();
}

namespace {

/// Per-sequence descriptor cache; describe() is deterministic per frame.
class DescriptorCache {
 public:
  DescriptorCache(const std::vector<SequenceStore>& stores, const DescriptorConfig& cfg)
      : stores_(stores), cfg_(cfg), cache_(stores.size()) {}

  const std::vector<Descriptor>& get(int seq, int frame) {
    auto& per_seq = cache_[seq];
    auto it = per_seq.find(frame);
    if (it != per_seq.end()) return it->second;
    auto descs = describe(stores_[seq].cloud(frame), cfg_);
    return per_seq.emplace(frame, std::move(descs)).first->second;
  }

 private:
  const std::vector<SequenceStore>& stores_;
  DescriptorConfig cfg_;
  std::vector<std::map<int, std::vector<Descriptor>>> cache_;
};

std::vector<SequenceStore> open_stores(const std::vector<std::string>& dirs, int stride) {
  if (dirs.empty()) throw ConfigError("no dataset directories given");
  std::vector<SequenceStore> stores;
  stores.reserve(dirs.size());
  for (const auto& d : dirs) stores.push_back(SequenceStore::ingest(d, stride));
  return stores;
}

}  // namespace

TrainResult train(const TrainConfig& cfg) {
  if (cfg.schedule.total_epochs <= 0) throw ConfigError("total_epochs must be positive");
  auto stores = open_stores(cfg.dataset_dirs, cfg.stride);
  if (cfg.measure_ir) {
    for (const auto& s : stores)
      if (!s.has_poses()) throw ConfigError("measure_ir requires ground-truth poses");
  }

  std::optional<SimilarityMap> map;
  if (cfg.filter.mode == FilterMode::adaptive) {
    if (cfg.map_path.empty())
      throw ConfigError("adaptive filtering requires a similarity map path");
    map = SimilarityMap::load_csv(cfg.map_path);
  }

  int total_frames = 0;
  for (const auto& s : stores) total_frames += static_cast<int>(s.num_frames());
  const int pairs_per_epoch = cfg.pairs_per_epoch > 0 ? cfg.pairs_per_epoch : total_frames;

  fs::create_directories(cfg.out_dir);
  std::ofstream report_stream(fs::path(cfg.out_dir) / "reports.jsonl");
  if (!report_stream) throw IoError("cannot open report stream in " + cfg.out_dir);

  TrainResult result;
  result.student = EmbeddingParams::random_init(cfg.embedding_dim, cfg.seed);
  result.labeler = result.student;

  DescriptorCache desc_cache(stores, cfg.descriptor);
  std::mt19937_64 rng(cfg.seed ^ 0x7261696eULL);

  for (int epoch = 0; epoch < cfg.schedule.total_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (epoch > 0) result.labeler = ema_update(result.labeler, result.student, cfg.ema);
    const int bound = bound_at(cfg.schedule, epoch);

    EpochReport report;
    report.epoch = epoch;
    report.bound = bound;
    double loss_sum = 0.0;
    int loss_count = 0;
    double ir_sum = 0.0;
    int ir_count = 0;

    std::uniform_int_distribution<int> seq_dist(0, static_cast<int>(stores.size()) - 1);
    for (int p = 0; p < pairs_per_epoch; ++p) {
      const int seq = seq_dist(rng);
      const SequenceStore& store = stores[seq];
      PairSample sample;
      try {
        sample = sample_progressive(store, bound, rng);
      } catch (const SequenceTooShort&) {
        continue;
      }
      ++report.attempted;

      RegistrarConfig reg_cfg = cfg.registrar;
      reg_cfg.seed = cfg.seed ^ (static_cast<std::uint64_t>(epoch) << 20) ^
                     static_cast<std::uint64_t>(p);
      const PointCloud& src = store.cloud(sample.src_frame);
      const PointCloud& dst = store.cloud(sample.dst_frame);

      LabelSet labels;
      try {
        labels = generate_labels(src, dst, sample.interval, result.labeler, cfg.filter,
                                 reg_cfg, map ? &*map : nullptr, cfg.descriptor,
                                 cfg.beta_inlier);
      } catch (const SkipPair&) {
        ++report.skipped;
        continue;
      }

      if (cfg.measure_ir && sample.interval > 1 && !labels.c_st.empty()) {
        const Pose true_pose = store.relative_pose(sample.src_frame, sample.dst_frame);
        ir_sum += inlier_ratio(src, dst, true_pose, labels.c_st, 0.3);
        ++ir_count;
      }

      const CorrespondenceSet c_st = subsample_corr(labels.c_st, cfg.max_label_pairs, rng);
      const CorrespondenceSet c_ts = subsample_corr(labels.c_ts, cfg.max_label_pairs, rng);
      const auto& desc_s = desc_cache.get(seq, sample.src_frame);
      const auto& desc_t = desc_cache.get(seq, sample.dst_frame);
      LossGrad grad;
      try {
        grad = hardest_contrastive_loss(desc_s, desc_t, result.student, c_st, c_ts, cfg.loss,
                                        rng);
      } catch (const EmptyCorrespondences&) {
        ++report.skipped;
        continue;
      }
      sgd_step(result.student, grad, cfg.loss);
      loss_sum += grad.loss;
      ++loss_count;
    }

    report.loss_mean = loss_count > 0 ? loss_sum / loss_count : 0.0;
    if (ir_count > 0) report.labeler_ir = ir_sum / ir_count;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report_stream << report.to_json() << "\n";
    report_stream.flush();
    result.reports.push_back(report);
    if (cfg.verbose)
      std::fprintf(stderr, "epoch %d B=%d attempted=%d skipped=%d loss=%.4f (%.1fs)\n",
                   epoch, bound, report.attempted, report.skipped, report.loss_mean,
                   report.wall_time_s);

    if ((epoch + 1) % cfg.checkpoint_every == 0 || epoch + 1 == cfg.schedule.total_epochs) {
      result.checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.eyoc").string();
      save_checkpoint(result.student, result.labeler, result.checkpoint_path);
    }
  }

  for (const auto& s : stores) result.pose_reads += s.pose_reads();
  return result;
}

RegistrationOutput register_pair(const PointCloud& src, const PointCloud& dst,
                                 const EmbeddingParams& params, const EvalConfig& cfg) {
  const FeatureMap f_s = embed(describe(src, cfg.descriptor), params);
  const FeatureMap f_t = embed(describe(dst, cfg.descriptor), params);
  const CorrespondenceSet corr = match_features(f_s, f_t);
  if (cfg.estimator == Estimator::ransac)
    return register_ransac(corr, src, dst, cfg.ransac_iters, cfg.registrar.inlier_thresh_m,
                           cfg.registrar.seed);
  return register_sc2pcr(corr, src, dst, cfg.registrar);
}

EvalReport evaluate(const EmbeddingParams& student, const EvalConfig& cfg) {
  auto stores = open_stores(cfg.dataset_dirs, cfg.stride);
  for (const auto& s : stores)
    if (!s.has_poses()) throw ConfigError("evaluate requires ground-truth poses");

  EvalReport report;
  std::mt19937_64 rng(cfg.seed ^ 0x6576616cULL);
  double ir_total = 0.0;
  int ir_pairs = 0;
  std::vector<double> populated_rr;

  for (const auto& [d_min, d_max] : cfg.buckets.intervals) {
    BucketReport bucket;
    bucket.d_min = d_min;
    bucket.d_max = d_max;

    // Candidate pairs from every sequence; sampled without replacement.
    std::vector<std::pair<int, PairSample>> candidates;
    for (std::size_t s = 0; s < stores.size(); ++s) {
      for (auto& pair : pairs_in_range(stores[s], d_min, d_max))
        candidates.emplace_back(static_cast<int>(s), pair);
    }
    const int take = std::min<int>(cfg.pairs_per_bucket, static_cast<int>(candidates.size()));
    for (int i = 0; i < take; ++i) {
      std::uniform_int_distribution<int> dist(i, static_cast<int>(candidates.size()) - 1);
      std::swap(candidates[i], candidates[dist(rng)]);
    }

    std::vector<RegistrationResult> results;
    double ir_sum = 0.0;
    for (int i = 0; i < take; ++i) {
      const auto& [seq, sample] = candidates[i];
      const PointCloud& src = stores[seq].cloud(sample.src_frame);
      const PointCloud& dst = stores[seq].cloud(sample.dst_frame);
      EvalConfig pair_cfg = cfg;
      pair_cfg.registrar.seed = cfg.seed ^ (static_cast<std::uint64_t>(i) << 8);
      Pose est;
      bool failed = false;
      try {
        est = register_pair(src, dst, student, pair_cfg).pose;
      } catch (const Error&) {
        failed = true;
      }
      RegistrationResult r;
      if (failed) {
        r.re_deg = 180.0;
        r.te_m = 1e9;
        r.success = false;
      } else {
        r = evaluate_pair(*sample.true_pose, est, cfg.thresholds);
      }
      results.push_back(r);

      const FeatureMap f_s = embed(describe(src, cfg.descriptor), student);
      const FeatureMap f_t = embed(describe(dst, cfg.descriptor), student);
      const CorrespondenceSet corr = match_features(f_s, f_t);
      ir_sum += inlier_ratio(src, dst, *sample.true_pose, corr, cfg.thresholds.t_inlier_m);
    }

    bucket.pairs = take;
    if (take > 0) {
      const AggregateResult agg = aggregate(results);
      bucket.rr = agg.rr;
      bucket.rre_deg = agg.rre_deg;
      bucket.rte_m = agg.rte_m;
      bucket.mean_ir = ir_sum / take;
      populated_rr.push_back(agg.rr);
      ir_total += ir_sum;
      ir_pairs += take;
    } else {
      std::fprintf(stderr, "warning: bucket [%g,%g] has no pairs; excluded from mRR\n",
                   d_min, d_max);
    }
    report.buckets.push_back(bucket);
  }

  report.populated_buckets = static_cast<int>(populated_rr.size());
  if (!populated_rr.empty()) {
    double sum = 0.0;
    for (double rr : populated_rr) sum += rr;
    report.mrr = sum / populated_rr.size();
  }
  report.mean_ir = ir_pairs > 0 ? ir_total / ir_pairs : 0.0;
  return report;
}

std::string EvalReport::to_json() const {
  std::ostringstream os;
  os << "{\"mrr\":" << fmt(mrr) << ",\"ir\":" << fmt(mean_ir)
     << ",\"populated_buckets\":" << populated_buckets << ",\"buckets\":[";
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    const auto& b = buckets[i];
    if (i) os << ",";
    os << "{\"d_min\":" << fmt(b.d_min) << ",\"d_max\":" << fmt(b.d_max)
       << ",\"pairs\":" << b.pairs << ",\"rr\":" << fmt(b.rr)
       << ",\"rre_deg\":" << opt_json(b.rre_deg) << ",\"rte_cm\":"
       << (b.rte_m ? fmt(*b.rte_m * 100.0) : "null") << ",\"ir\":" << fmt(b.mean_ir) << "}";
  }
  os << "]}";
  return os.str();
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "d_min,d_max,pairs,rr,rre_deg,rte_cm,ir\n";
  for (const auto& b : buckets) {
    os << fmt(b.d_min) << "," << fmt(b.d_max) << "," << b.pairs << "," << fmt(b.rr) << ","
       << (b.rre_deg ? fmt(*b.rre_deg) : "") << ","
       << (b.rte_m ? fmt(*b.rte_m * 100.0) : "") << "," << fmt(b.mean_ir) << "\n";
  }
  return os.str();
}

SimilarityMap build_filter_map(const std::vector<std::string>& dataset_dirs, int stride,
                               const EmbeddingParams& labeler, const DescriptorConfig& desc_cfg,
                               int max_interval, int pairs, std::uint64_t seed) {
  auto stores = open_stores(dataset_dirs, stride);
  for (const auto& s : stores)
    if (!s.has_poses()) throw ConfigError("build_filter_map requires ground-truth poses");

  std::mt19937_64 rng(seed ^ 0x6d6170ULL);
  std::uniform_int_distribution<int> seq_dist(0, static_cast<int>(stores.size()) - 1);

  std::vector<std::pair<int, std::pair<int, int>>> chosen;
  for (int p = 0; p < pairs; ++p) {
    const int seq = seq_dist(rng);
    try {
      const PairSample s = sample_progressive(stores[seq], max_interval, rng);
      chosen.push_back({seq, {s.src_frame, s.dst_frame}});
    } catch (const SequenceTooShort&) {
    }
  }
  if (chosen.empty()) throw InsufficientData("build_filter_map: no usable pairs");

  std::vector<SimilarityMapSample> refs;
  for (const auto& [seq, frames] : chosen) {
    SimilarityMapSample s;
    s.src = &stores[seq].cloud(frames.first);
    s.dst = &stores[seq].cloud(frames.second);
    s.true_pose = stores[seq].relative_pose(frames.first, frames.second);
    refs.push_back(s);
  }
  return build_similarity_map(refs, labeler, desc_cfg);
}

}  // namespace eyoc
