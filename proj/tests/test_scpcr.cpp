#include <doctest.h>

#include <random>

#include "eyoc/scpcr.hpp"

using namespace eyoc;

namespace {

struct Instance {
  PointCloud src, dst;
  CorrespondenceSet corr;
  Pose truth;
  int true_inliers = 0;
};

// n correspondences, the first `inliers` exact under `truth`, the rest mapped
// to uniformly random target positions.
Instance planted_instance(int n, int inliers, std::uint64_t seed, double span = 40.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-span, span);
  std::uniform_real_distribution<double> angle(-1.0, 1.0);
  Instance inst;
  inst.truth.rotation = axis_angle(
      Eigen::Vector3d(angle(rng), angle(rng), angle(rng)).normalized(), angle(rng));
  inst.truth.translation = Eigen::Vector3d(u(rng), u(rng), u(rng)) * 0.2;
  inst.true_inliers = inliers;
  for (int i = 0; i < n; ++i) {
    const Point3 p(u(rng), u(rng), u(rng) * 0.2);
    inst.src.points.push_back(p);
    if (i < inliers) {
      inst.dst.points.push_back(apply_pose(p, inst.truth));
    } else {
      inst.dst.points.emplace_back(u(rng), u(rng), u(rng) * 0.2);
    }
    inst.corr.push_back({i, i, 0.0});
  }
  return inst;
}

}  // namespace

TEST_CASE("first_order matches a brute-force oracle") {
  const Instance inst = planted_instance(60, 30, 5);
  const CompatibilityMatrix m = first_order(inst.corr, inst.src, inst.dst, 0.6);
  const CompatibilityMatrix ms = serial::first_order(inst.corr, inst.src, inst.dst, 0.6);
  CHECK((m - ms).cwiseAbs().maxCoeff() == 0.0);
  for (int x = 0; x < 60; ++x) {
    CHECK(m(x, x) == 0.0);
    for (int y = 0; y < 60; ++y) {
      if (x == y) continue;
      const double ls =
          (inst.src.points[inst.corr[x].src] - inst.src.points[inst.corr[y].src]).norm();
      const double lt =
          (inst.dst.points[inst.corr[x].dst] - inst.dst.points[inst.corr[y].dst]).norm();
      CHECK(m(x, y) == (std::abs(ls - lt) < 0.6 ? 1.0 : 0.0));
      CHECK(m(x, y) == m(y, x));
    }
  }
}

TEST_CASE("first_order boundary difference is not compatible") {
  PointCloud src, dst;
  src.points = {Point3(0, 0, 0), Point3(1, 0, 0)};
  // target length longer by exactly the threshold: strict comparison drops it
  dst.points = {Point3(0, 0, 0), Point3(1.6, 0, 0)};
  const CorrespondenceSet corr = {{0, 0, 0}, {1, 1, 0}};
  CHECK(first_order(corr, src, dst, 0.6)(0, 1) == 0.0);
  dst.points[1] = Point3(1.59, 0, 0);
  CHECK(first_order(corr, src, dst, 0.6)(0, 1) == 1.0);

  CHECK_THROWS_AS(first_order({{0, 0, 0}}, src, dst, 0.6), TooFewCorrespondences);
  CHECK_THROWS_AS(first_order({{0, 0, 0}, {5, 1, 0}}, src, dst, 0.6), OutOfRange);
}

TEST_CASE("sc2 equals the common-neighbor count oracle") {
  const Instance inst = planted_instance(50, 25, 9);
  const CompatibilityMatrix binary = first_order(inst.corr, inst.src, inst.dst, 0.6);
  const CompatibilityMatrix scores = sc2(binary);
  const CompatibilityMatrix scores_s = serial::sc2(binary);
  CHECK((scores - scores_s).cwiseAbs().maxCoeff() == 0.0);

  const int n = 50;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      double expected = 0.0;
      if (binary(x, y) != 0.0)
        for (int z = 0; z < n; ++z) expected += binary(x, z) * binary(z, y);
      CHECK(scores(x, y) == expected);
      CHECK(scores(x, y) <= n - 2);
      CHECK(scores(x, y) == scores(y, x));
    }
  }

  // inlier pairs share at least (true_inliers - 2) common neighbors when the
  // planted inliers are mutually compatible
  int min_inlier_score = n;
  bool all_compatible = true;
  for (int x = 0; x < inst.true_inliers; ++x)
    for (int y = 0; y < inst.true_inliers; ++y) {
      if (x == y) continue;
      if (binary(x, y) == 0.0) all_compatible = false;
    }
  if (all_compatible) {
    for (int x = 0; x < inst.true_inliers; ++x)
      for (int y = x + 1; y < inst.true_inliers; ++y)
        min_inlier_score = std::min(min_inlier_score, static_cast<int>(scores(x, y)));
    CHECK(min_inlier_score >= inst.true_inliers - 2);
  }
}

TEST_CASE("power_iteration converges to the leading eigenvector") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd m(30, 30);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = std::abs(gauss(rng));
      m(i, j) = v;
      m(j, i) = v;
    }
  const Eigen::VectorXd v = power_iteration(m, 200);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd lead = es.eigenvectors().col(29);
  CHECK(std::abs(v.dot(lead)) > 0.9999);
  CHECK(v.norm() == doctest::Approx(1.0));
}

TEST_CASE("register_sc2pcr recovers the exact pose with pure inliers") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const Instance inst = planted_instance(80, 80, seed);
    const RegistrationOutput out = register_sc2pcr(inst.corr, inst.src, inst.dst, {});
    CHECK(rotation_error(inst.truth.rotation, out.pose.rotation) < 1e-6);
    CHECK(translation_error(inst.truth.translation, out.pose.translation) < 1e-6);
    CHECK(out.confidence == 80);
  }
}

TEST_CASE("register_sc2pcr survives 80 percent outliers") {
  int successes = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Instance inst = planted_instance(100, 20, 100 + seed);
    try {
      const RegistrationOutput out = register_sc2pcr(inst.corr, inst.src, inst.dst, {});
      if (rotation_error(inst.truth.rotation, out.pose.rotation) < 2.0 &&
          translation_error(inst.truth.translation, out.pose.translation) < 0.6)
        ++successes;
    } catch (const RegistrationFailed&) {
    }
  }
  CHECK(successes >= 19);
}

TEST_CASE("register_sc2pcr reports failure on pure noise") {
  // targets decoupled from sources: no rigid motion explains 3+ matches well
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  PointCloud src, dst;
  CorrespondenceSet corr;
  for (int i = 0; i < 30; ++i) {
    src.points.emplace_back(u(rng), u(rng), u(rng));
    dst.points.emplace_back(u(rng), u(rng), u(rng));
    corr.push_back({i, i, 0.0});
  }
  RegistrarConfig cfg;
  cfg.inlier_thresh_m = 1e-6;
  CHECK_THROWS_AS(register_sc2pcr(corr, src, dst, cfg), RegistrationFailed);
  CHECK_THROWS_AS(register_sc2pcr({{0, 0, 0}, {1, 1, 0}}, src, dst, cfg),
                  TooFewCorrespondences);
}

TEST_CASE("register_sc2pcr is deterministic and subsamples large sets") {
  Instance inst = planted_instance(400, 120, 7);
  RegistrarConfig cfg;
  cfg.max_corrs = 150;
  const RegistrationOutput a = register_sc2pcr(inst.corr, inst.src, inst.dst, cfg);
  const RegistrationOutput b = register_sc2pcr(inst.corr, inst.src, inst.dst, cfg);
  CHECK((a.pose.rotation - b.pose.rotation).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.pose.translation - b.pose.translation).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.confidence == b.confidence);
  // the inlier mask covers the full input set, not only the subsample
  CHECK(a.inlier_mask.size() == 400);
  CHECK(rotation_error(inst.truth.rotation, a.pose.rotation) < 2.0);
}

TEST_CASE("register_sc2pcr accuracy does not degrade with more inliers") {
  const RegistrarConfig cfg;
  double prev_success = -1.0;
  for (int inliers : {20, 40, 80}) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Instance inst = planted_instance(100, inliers, 300 + seed * 13 + inliers);
      try {
        const RegistrationOutput out = register_sc2pcr(inst.corr, inst.src, inst.dst, cfg);
        if (rotation_error(inst.truth.rotation, out.pose.rotation) < 2.0) ++ok;
      } catch (const RegistrationFailed&) {
      }
    }
    CHECK(ok >= prev_success);
    prev_success = ok;
  }
}

TEST_CASE("register_ransac recovers planted poses") {
  const Instance pure = planted_instance(50, 50, 31);
  const RegistrationOutput exact = register_ransac(pure.corr, pure.src, pure.dst, 500, 0.6, 1);
  CHECK(rotation_error(pure.truth.rotation, exact.pose.rotation) < 1e-6);

  const Instance noisy = planted_instance(60, 30, 32);
  const RegistrationOutput out = register_ransac(noisy.corr, noisy.src, noisy.dst, 2000, 0.6, 2);
  CHECK(rotation_error(noisy.truth.rotation, out.pose.rotation) < 2.0);
  CHECK(translation_error(noisy.truth.translation, out.pose.translation) < 0.6);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  PointCloud src, dst;
  CorrespondenceSet corr;
  for (int i = 0; i < 20; ++i) {
    src.points.emplace_back(u(rng), u(rng), u(rng));
    dst.points.emplace_back(u(rng), u(rng), u(rng));
    corr.push_back({i, i, 0.0});
  }
  CHECK_THROWS_AS(register_ransac(corr, src, dst, 200, 1e-6, 4), RegistrationFailed);
}
