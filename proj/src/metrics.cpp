#include "eyoc/metrics.hpp"

namespace eyoc {

RegistrationResult evaluate_pair(const Pose& true_pose, const Pose& est_pose,
                                 const MetricThresholds& thresholds,
                                 const std::string& pair_id) {
  RegistrationResult r;
  r.pair_id = pair_id;
  r.re_deg = rotation_error(true_pose.rotation, est_pose.rotation);
  r.te_m = translation_error(true_pose.translation, est_pose.translation);
  r.success = (r.re_deg < thresholds.t_rot_deg) && (r.te_m < thresholds.t_trans_m);
  return r;
}

AggregateResult aggregate(const std::vector<RegistrationResult>& results) {
  if (results.empty()) throw EmptyInput("aggregate: no results");
  AggregateResult out;
  out.total = static_cast<int>(results.size());
  double re_sum = 0.0, te_sum = 0.0;
  for (const auto& r : results) {
    if (r.success) {
      ++out.successes;
      re_sum += r.re_deg;
      te_sum += r.te_m;
    }
  }
  out.rr = static_cast<double>(out.successes) / out.total;
  if (out.successes > 0) {
    out.rre_deg = re_sum / out.successes;
    out.rte_m = te_sum / out.successes;
  }
  return out;
}

double mean_rr(const std::vector<double>& bucketed_rr, const DistanceBuckets& buckets) {
  if (bucketed_rr.size() != buckets.intervals.size())
    throw ArityMismatch("mean_rr: one rr per bucket required");
  if (bucketed_rr.empty()) throw EmptyInput("mean_rr: no buckets");
  double sum = 0.0;
  for (double rr : bucketed_rr) sum += rr;
  return sum / bucketed_rr.size();
}

double inlier_ratio(const PointCloud& src, const PointCloud& dst, const Pose& true_pose,
                    const CorrespondenceSet& corr, double t_inlier) {
  if (corr.empty()) throw EmptyCorrespondences("inlier_ratio: empty correspondence set");
  int inliers = 0;
  for (const auto& c : corr) {
    if (c.src < 0 || c.src >= static_cast<int>(src.size()) || c.dst < 0 ||
        c.dst >= static_cast<int>(dst.size()))
      throw OutOfRange("inlier_ratio: correspondence index out of range");
    const Point3 p = apply_pose(src.points[c.src], true_pose);
    if ((p - dst.points[c.dst]).norm() <= t_inlier) ++inliers;
  }
  return static_cast<double>(inliers) / corr.size();
}

}  // namespace eyoc
