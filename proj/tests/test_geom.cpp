#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "eyoc/geom.hpp"

using namespace eyoc;

namespace {

Pose random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Vector3d axis(u(rng), u(rng), u(rng));
  while (axis.norm() < 1e-6) axis = Eigen::Vector3d(u(rng), u(rng), u(rng));
  Pose p;
  p.rotation = axis_angle(axis, u(rng) * 3.0);
  p.translation = Eigen::Vector3d(u(rng), u(rng), u(rng)) * 10.0;
  return p;
}

PointCloud random_cloud(std::mt19937_64& rng, int n, double scale = 10.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  PointCloud c;
  for (int i = 0; i < n; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  return c;
}

// Quaternion dot-product angle oracle.
double quat_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Quaterniond qa(a), qb(b);
  const double d = std::min(std::abs(qa.dot(qb)), 1.0);
  return 2.0 * std::acos(d) * 180.0 / std::numbers::pi;
}

// Weighted registration residual, for comparing against a gradient-descent fit.
double weighted_residual(const std::vector<Point3>& src, const std::vector<Point3>& dst,
                         const std::vector<double>& w, const Pose& pose) {
  double sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i)
    sum += w[i] * (apply_pose(src[i], pose) - dst[i]).squaredNorm();
  return sum;
}

}  // namespace

TEST_CASE("apply_pose identity and axis rotation") {
  std::mt19937_64 rng(1);
  const PointCloud c = random_cloud(rng, 20);
  const PointCloud same = apply_pose(c, Pose::identity());
  for (std::size_t i = 0; i < c.size(); ++i)
    CHECK((c.points[i] - same.points[i]).norm() == doctest::Approx(0.0));

  Pose rot90;
  rot90.rotation = axis_angle(Eigen::Vector3d::UnitZ(), std::numbers::pi / 2.0);
  const Point3 out = apply_pose(Point3(1, 0, 0), rot90);
  CHECK(out.x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.y() == doctest::Approx(1.0));
  CHECK(out.z() == doctest::Approx(0.0));
}

TEST_CASE("compose matches sequential application") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const PointCloud c = random_cloud(rng, 15);
    const PointCloud seq = apply_pose(apply_pose(c, a), b);
    const PointCloud composed = apply_pose(c, compose(a, b));
    for (std::size_t i = 0; i < c.size(); ++i)
      CHECK((seq.points[i] - composed.points[i]).norm() < 1e-9);
  }
}

TEST_CASE("compose identity and inverse") {
  std::mt19937_64 rng(3);
  const Pose p = random_pose(rng);
  const Pose id_p = compose(Pose::identity(), p);
  CHECK((id_p.rotation - p.rotation).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((id_p.translation - p.translation).norm() < 1e-12);

  const Pose round = compose(p, inverse(p));
  CHECK((round.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(round.translation.norm() < 1e-9);
}

TEST_CASE("inverse of pure translation") {
  Pose p;
  p.translation = Eigen::Vector3d(1, 2, 3);
  const Pose inv = inverse(p);
  CHECK((inv.translation + p.translation).norm() < 1e-12);
  CHECK((inv.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("inverse matches matrix inverse oracle") {
  std::mt19937_64 rng(4);
  const Pose p = random_pose(rng);
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = p.rotation;
  m.block<3, 1>(0, 3) = p.translation;
  const Eigen::Matrix4d minv = m.inverse();
  const Pose inv = inverse(p);
  CHECK((inv.rotation - minv.block<3, 3>(0, 0)).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((inv.translation - minv.block<3, 1>(0, 3)).norm() < 1e-9);
}

TEST_CASE("fit_pose_weighted exact recovery on noise-free pairs") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Pose truth = random_pose(rng);
    const PointCloud src = random_cloud(rng, 30);
    const PointCloud dst = apply_pose(src, truth);
    const std::vector<double> w(src.size(), 1.0);
    const Pose fit = fit_pose_weighted(src.points, dst.points, w);
    CHECK((fit.rotation - truth.rotation).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((fit.translation - truth.translation).norm() < 1e-9);
  }
}

TEST_CASE("fit_pose_weighted rejects collinear points") {
  const std::vector<Point3> src = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  const std::vector<Point3> dst = {{0, 1, 0}, {1, 1, 0}, {2, 1, 0}};
  CHECK_THROWS_AS(fit_pose_weighted(src, dst, {1, 1, 1}), DegenerateConfiguration);
}

TEST_CASE("fit_pose_weighted matches gradient descent on noisy weighted data") {
  std::mt19937_64 rng(6);
  const Pose truth = random_pose(rng);
  PointCloud src = random_cloud(rng, 40);
  PointCloud dst = apply_pose(src, truth);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::uniform_real_distribution<double> wdist(0.1, 2.0);
  std::vector<double> w;
  for (auto& p : dst.points) p += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
  for (std::size_t i = 0; i < src.size(); ++i) w.push_back(wdist(rng));

  const Pose fit = fit_pose_weighted(src.points, dst.points, w);

  // Iterative descent on the weighted objective over small rotation updates.
  Pose current = fit;
  // perturb away from the SVD answer so the oracle does real work
  current.rotation = axis_angle(Eigen::Vector3d::UnitX(), 0.05) * current.rotation;
  current.translation += Eigen::Vector3d(0.05, -0.03, 0.02);
  double step = 1e-3;
  double best = weighted_residual(src.points, dst.points, w, current);
  for (int it = 0; it < 20000; ++it) {
    bool improved = false;
    for (int axis = 0; axis < 3; ++axis) {
      for (double sign : {-1.0, 1.0}) {
        Pose cand = current;
        cand.rotation =
            axis_angle(Eigen::Vector3d::Unit(axis), sign * step) * cand.rotation;
        double r = weighted_residual(src.points, dst.points, w, cand);
        if (r < best) {
          best = r;
          current = cand;
          improved = true;
        }
        cand = current;
        cand.translation(axis) += sign * step;
        r = weighted_residual(src.points, dst.points, w, cand);
        if (r < best) {
          best = r;
          current = cand;
          improved = true;
        }
      }
    }
    if (!improved) {
      step *= 0.5;
      if (step < 1e-10) break;
    }
  }
  const double svd_residual = weighted_residual(src.points, dst.points, w, fit);
  CHECK(svd_residual <= best + 1e-6);
  CHECK(std::abs(svd_residual - best) < 1e-6);
}

TEST_CASE("rotation_error basics and quaternion oracle") {
  std::mt19937_64 rng(7);
  const Pose p = random_pose(rng);
  CHECK(rotation_error(p.rotation, p.rotation) == doctest::Approx(0.0));

  const Eigen::Matrix3d further =
      p.rotation * axis_angle(Eigen::Vector3d(1, 2, 3), 30.0 * std::numbers::pi / 180.0);
  CHECK(rotation_error(p.rotation, further) == doctest::Approx(30.0).epsilon(1e-9));

  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d a = random_pose(rng).rotation;
    const Eigen::Matrix3d b = random_pose(rng).rotation;
    CHECK(std::abs(rotation_error(a, b) - quat_angle_deg(a, b)) < 1e-6);
    CHECK(rotation_error(a, b) == doctest::Approx(rotation_error(b, a)));
  }
}

TEST_CASE("rotation_error recovers the applied angle") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> angle_deg(1.0, 179.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d a = random_pose(rng).rotation;
    const double theta = angle_deg(rng);
    const Eigen::Matrix3d b =
        a * axis_angle(Eigen::Vector3d(0.3, -1.0, 0.5), theta * std::numbers::pi / 180.0);
    CHECK(rotation_error(a, b) == doctest::Approx(theta).epsilon(1e-9));
  }
}

TEST_CASE("translation_error") {
  CHECK(translation_error({1, 2, 3}, {1, 2, 3}) == doctest::Approx(0.0));
  CHECK(translation_error({0, 0, 0}, {3, 4, 0}) == doctest::Approx(5.0));
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int t = 0; t < 10; ++t) {
    const Eigen::Vector3d a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    const double oracle = std::sqrt((a.x() - b.x()) * (a.x() - b.x()) +
                                    (a.y() - b.y()) * (a.y() - b.y()) +
                                    (a.z() - b.z()) * (a.z() - b.z()));
    CHECK(translation_error(a, b) == doctest::Approx(oracle));
  }
}

TEST_CASE("apply_pose preserves pairwise distances") {
  std::mt19937_64 rng(10);
  const Pose p = random_pose(rng);
  const PointCloud c = random_cloud(rng, 25);
  const PointCloud moved = apply_pose(c, p);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      const double before = (c.points[i] - c.points[j]).norm();
      const double after = (moved.points[i] - moved.points[j]).norm();
      CHECK(std::abs(before - after) < 1e-9);
    }
}
