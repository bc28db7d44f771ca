#include "eyoc/scpcr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eyoc {

namespace {

void check_corr(const CorrespondenceSet& corr, const PointCloud& src, const PointCloud& dst,
                std::size_t min_count) {
  if (corr.size() < min_count)
    throw TooFewCorrespondences("need >= " + std::to_string(min_count) + " correspondences");
  for (const auto& c : corr) {
    if (c.src < 0 || c.src >= static_cast<int>(src.size()) || c.dst < 0 ||
        c.dst >= static_cast<int>(dst.size()))
      throw OutOfRange("correspondence index out of range");
  }
}

template <bool Parallel>
CompatibilityMatrix first_order_impl(const CorrespondenceSet& corr, const PointCloud& src,
                                     const PointCloud& dst, double comp_thresh) {
  check_corr(corr, src, dst, 2);
  const int n = static_cast<int>(corr.size());
  CompatibilityMatrix m = CompatibilityMatrix::Zero(n, n);
#pragma omp parallel for schedule(dynamic, 16) if (Parallel)
  for (int x = 0; x < n; ++x) {
    for (int y = x + 1; y < n; ++y) {
      const double ls = (src.points[corr[x].src] - src.points[corr[y].src]).norm();
      const double lt = (dst.points[corr[x].dst] - dst.points[corr[y].dst]).norm();
      if (std::abs(ls - lt) < comp_thresh) {
        m(x, y) = 1.0;
        m(y, x) = 1.0;
      }
    }
  }
  return m;
}

}  // namespace

CompatibilityMatrix first_order(const CorrespondenceSet& corr, const PointCloud& src,
                                const PointCloud& dst, double comp_thresh) {
  return first_order_impl<true>(corr, src, dst, comp_thresh);
}

CompatibilityMatrix sc2(const CompatibilityMatrix& binary) {
  // M .* M^2 exploiting sparsity of the binary matrix.
  const int n = static_cast<int>(binary.rows());
  CompatibilityMatrix out = CompatibilityMatrix::Zero(n, n);
#pragma omp parallel for schedule(dynamic, 16)
  for (int x = 0; x < n; ++x) {
    for (int y = x + 1; y < n; ++y) {
      if (binary(x, y) == 0.0) continue;
      double common = 0.0;
      for (int z = 0; z < n; ++z) common += binary(x, z) * binary(z, y);
      out(x, y) = common;
      out(y, x) = common;
    }
  }
  return out;
}

namespace serial {

CompatibilityMatrix first_order(const CorrespondenceSet& corr, const PointCloud& src,
                                const PointCloud& dst, double comp_thresh) {
  return first_order_impl<false>(corr, src, dst, comp_thresh);
}

CompatibilityMatrix sc2(const CompatibilityMatrix& binary) {
  const int n = static_cast<int>(binary.rows());
  CompatibilityMatrix out = CompatibilityMatrix::Zero(n, n);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (binary(x, y) == 0.0) continue;
      double common = 0.0;
      for (int z = 0; z < n; ++z) common += binary(x, z) * binary(z, y);
      out(x, y) = common;
    }
  return out;
}

}  // namespace serial

Eigen::VectorXd power_iteration(const Eigen::MatrixXd& mat, int iters) {
  const int n = static_cast<int>(mat.rows());
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd next = mat * v;
    const double norm = next.norm();
    if (norm <= 1e-300) return v;
    v = next / norm;
  }
  for (int i = 0; i < n; ++i) {
    if (v(i) != 0.0) {
      if (v(i) < 0.0) v = -v;
      break;
    }
  }
  return v;
}

namespace {

int count_inliers(const Pose& pose, const CorrespondenceSet& corr, const PointCloud& src,
                  const PointCloud& dst, double thresh, std::vector<bool>* mask) {
  const int n = static_cast<int>(corr.size());
  if (mask) mask->assign(n, false);
  int count = 0;
#pragma omp parallel for schedule(static) reduction(+ : count)
  for (int i = 0; i < n; ++i) {
    const Point3 p = apply_pose(src.points[corr[i].src], pose);
    if ((p - dst.points[corr[i].dst]).norm() < thresh) {
      ++count;
      if (mask) (*mask)[i] = true;
    }
  }
  return count;
}

Pose fit_on_mask(const CorrespondenceSet& corr, const PointCloud& src, const PointCloud& dst,
                 const std::vector<bool>& mask) {
  std::vector<Point3> ps, pd;
  std::vector<double> w;
  for (std::size_t i = 0; i < corr.size(); ++i) {
    if (!mask[i]) continue;
    ps.push_back(src.points[corr[i].src]);
    pd.push_back(dst.points[corr[i].dst]);
    w.push_back(1.0);
  }
  return fit_pose_weighted(ps, pd, w);
}

}  // namespace

RegistrationOutput register_sc2pcr(const CorrespondenceSet& corr, const PointCloud& src,
                                   const PointCloud& dst, const RegistrarConfig& cfg) {
  check_corr(corr, src, dst, 3);

  // Subsample deterministically beyond max_corrs to bound the dense matrix.
  std::vector<int> active(corr.size());
  std::iota(active.begin(), active.end(), 0);
  if (static_cast<int>(corr.size()) > cfg.max_corrs) {
    std::mt19937_64 rng(cfg.seed);
    for (int i = 0; i < cfg.max_corrs; ++i) {
      std::uniform_int_distribution<int> dist(i, static_cast<int>(active.size()) - 1);
      std::swap(active[i], active[dist(rng)]);
    }
    active.resize(cfg.max_corrs);
    std::sort(active.begin(), active.end());
  }
  CorrespondenceSet sub;
  sub.reserve(active.size());
  for (int i : active) sub.push_back(corr[i]);

  const CompatibilityMatrix binary = first_order(sub, src, dst, cfg.comp_thresh_m);
  const CompatibilityMatrix scores = sc2(binary);
  const Eigen::VectorXd lead = power_iteration(scores, cfg.power_iters);

  // Candidates in descending eigenvector order, lowest index first on ties.
  std::vector<int> order(sub.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return lead(a) > lead(b); });

  // Greedy seed pick, suppressing candidates first-order-compatible with a
  // chosen seed.
  std::vector<int> seeds;
  for (int cand : order) {
    if (static_cast<int>(seeds.size()) >= cfg.num_seeds) break;
    bool suppressed = false;
    for (int s : seeds) {
      if (binary(s, cand) > 0.0) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) seeds.push_back(cand);
  }

  RegistrationOutput best;
  best.confidence = -1;
  for (int s : seeds) {
    std::vector<Point3> ps, pd;
    std::vector<double> w;
    double wmax = 0.0;
    for (std::size_t c = 0; c < sub.size(); ++c) {
      if (static_cast<int>(c) == s || scores(s, c) <= 0.0) continue;
      ps.push_back(src.points[sub[c].src]);
      pd.push_back(dst.points[sub[c].dst]);
      w.push_back(scores(s, c));
      wmax = std::max(wmax, scores(s, c));
    }
    ps.push_back(src.points[sub[s].src]);
    pd.push_back(dst.points[sub[s].dst]);
    w.push_back(std::max(wmax, 1.0));
    if (ps.size() < 3) continue;
    Pose hyp;
    try {
      hyp = fit_pose_weighted(ps, pd, w);
    } catch (const DegenerateConfiguration&) {
      continue;
    }
    std::vector<bool> mask;
    const int inliers = count_inliers(hyp, corr, src, dst, cfg.inlier_thresh_m, &mask);
    if (inliers > best.confidence) {
      best.pose = hyp;
      best.inlier_mask = std::move(mask);
      best.confidence = inliers;
    }
  }

  if (best.confidence < 3) throw RegistrationFailed("sc2pcr: fewer than 3 inliers");

  // One refinement pass on the winning consensus.
  try {
    const Pose refined = fit_on_mask(corr, src, dst, best.inlier_mask);
    std::vector<bool> mask;
    const int inliers = count_inliers(refined, corr, src, dst, cfg.inlier_thresh_m, &mask);
    if (inliers >= best.confidence) {
      best.pose = refined;
      best.inlier_mask = std::move(mask);
      best.confidence = inliers;
    }
  } catch (const DegenerateConfiguration&) {
    // keep the unrefined hypothesis
  }
  return best;
}

RegistrationOutput register_ransac(const CorrespondenceSet& corr, const PointCloud& src,
                                   const PointCloud& dst, int iters, double inlier_thresh,
                                   std::uint64_t seed) {
  check_corr(corr, src, dst, 3);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(0, static_cast<int>(corr.size()) - 1);

  RegistrationOutput best;
  best.confidence = -1;
  for (int it = 0; it < iters; ++it) {
    int a = dist(rng), b = dist(rng), c = dist(rng);
    if (a == b || a == c || b == c) continue;
    const std::vector<Point3> ps = {src.points[corr[a].src], src.points[corr[b].src],
                                    src.points[corr[c].src]};
    const std::vector<Point3> pd = {dst.points[corr[a].dst], dst.points[corr[b].dst],
                                    dst.points[corr[c].dst]};
    Pose hyp;
    try {
      hyp = fit_pose_weighted(ps, pd, {1.0, 1.0, 1.0});
    } catch (const DegenerateConfiguration&) {
      continue;
    }
    std::vector<bool> mask;
    const int inliers = count_inliers(hyp, corr, src, dst, inlier_thresh, &mask);
    if (inliers > best.confidence) {
      best.pose = hyp;
      best.inlier_mask = std::move(mask);
      best.confidence = inliers;
    }
  }
  if (best.confidence < 3) throw RegistrationFailed("ransac: fewer than 3 inliers");
  try {
    const Pose refined = fit_on_mask(corr, src, dst, best.inlier_mask);
    std::vector<bool> mask;
    const int inliers = count_inliers(refined, corr, src, dst, inlier_thresh, &mask);
    if (inliers >= best.confidence) {
      best.pose = refined;
      best.inlier_mask = std::move(mask);
      best.confidence = inliers;
    }
  } catch (const DegenerateConfiguration&) {
  }
  return best;
}

}  // namespace eyoc
