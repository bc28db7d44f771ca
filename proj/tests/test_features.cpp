#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "eyoc/features.hpp"

using namespace eyoc;
namespace fs = std::filesystem;

namespace {

PointCloud random_cloud(int n, std::uint64_t seed, double span = 20.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-span, span);
  PointCloud c;
  for (int i = 0; i < n; ++i) c.points.emplace_back(u(rng), u(rng), u(rng) * 0.1);
  return c;
}

}  // namespace

TEST_CASE("describe falls back to isotropic stats for sparse neighborhoods") {
  PointCloud cloud;
  cloud.points.emplace_back(0, 0, 2.5);
  cloud.points.emplace_back(100, 100, 0);
  const auto descs = describe(cloud);
  REQUIRE(descs.size() == 2);
  const Descriptor& d = descs[0];
  CHECK(d(0) == doctest::Approx(1.0 / 3.0));
  CHECK(d(1) == doctest::Approx(1.0 / 3.0));
  CHECK(d(2) == doctest::Approx(1.0 / 3.0));
  CHECK(d(5) == doctest::Approx(1.0));  // sphericity
  CHECK(d(7) == doctest::Approx(1.0));  // verticality
  CHECK(d(14) == doctest::Approx(0.5));
  CHECK(d(15) == doctest::Approx(0.025));
  CHECK_THROWS_AS(describe(PointCloud{}), EmptyInput);
}

TEST_CASE("describe recognises a planar patch") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointCloud cloud;
  for (int i = 0; i < 120; ++i) cloud.points.emplace_back(u(rng), u(rng), 0.0);
  const auto descs = describe(cloud);
  // a point near the patch centre: high planarity, tiny sphericity, vertical normal
  int centre = 0;
  double best = 1e9;
  for (int i = 0; i < 120; ++i) {
    const double r = cloud.points[i].head<2>().norm();
    if (r < best) {
      best = r;
      centre = i;
    }
  }
  const Descriptor& d = descs[centre];
  CHECK(d(4) > 0.8);
  CHECK(d(5) < 0.05);
  CHECK(d(7) > 0.99);
  // eigenvalue shares sum to one
  CHECK(d(0) + d(1) + d(2) == doctest::Approx(1.0));
}

TEST_CASE("describe shape statistics are translation invariant") {
  const PointCloud a = random_cloud(150, 5);
  PointCloud b = a;
  const Eigen::Vector3d shift(3.0, -2.0, 0.5);
  for (auto& p : b.points) p += shift;
  const auto da = describe(a);
  const auto db = describe(b);
  for (int i = 0; i < 150; ++i) {
    // indices 0..13 depend only on the local neighborhood shape
    for (int k = 0; k <= 13; ++k) CHECK(da[i](k) == doctest::Approx(db[i](k)).epsilon(1e-9));
  }
}

TEST_CASE("serial describe matches the parallel kernel") {
  const PointCloud cloud = random_cloud(200, 8);
  const auto par = describe(cloud);
  const auto ser = serial::describe(cloud);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) CHECK((par[i] - ser[i]).norm() == 0.0);
}

TEST_CASE("embed produces unit rows with a zero-norm fallback") {
  std::vector<Descriptor> descs(5, Descriptor::Ones());
  const EmbeddingParams params = EmbeddingParams::random_init(8, 2);
  const FeatureMap fm = embed(descs, params);
  REQUIRE(fm.size() == 5);
  REQUIRE(fm.dim() == 8);
  for (int i = 0; i < 5; ++i) CHECK(fm.rows.row(i).norm() == doctest::Approx(1.0));

  const EmbeddingParams zero = EmbeddingParams::zeros(8);
  const FeatureMap fz = embed(descs, zero);
  for (int i = 0; i < 5; ++i) {
    CHECK(fz.rows(i, 0) == 1.0);
    CHECK(fz.rows.row(i).norm() == doctest::Approx(1.0));
  }

  EmbeddingParams bad = params;
  bad.bias.resize(4);
  CHECK_THROWS_AS(embed(descs, bad), ShapeMismatch);
}

TEST_CASE("match_features agrees with brute force and the serial kernel") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss;
  FeatureMap a, b;
  a.rows.resize(40, 6);
  b.rows.resize(70, 6);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 6; ++j) a.rows(i, j) = gauss(rng);
    a.rows.row(i).normalize();
  }
  for (int i = 0; i < 70; ++i) {
    for (int j = 0; j < 6; ++j) b.rows(i, j) = gauss(rng);
    b.rows.row(i).normalize();
  }

  const CorrespondenceSet par = match_features(a, b);
  const CorrespondenceSet ser = serial::match_features(a, b);
  REQUIRE(par.size() == 40);
  for (int i = 0; i < 40; ++i) {
    int best = -1;
    double best_sim = -2.0;
    for (int j = 0; j < 70; ++j) {
      const double sim = a.rows.row(i).dot(b.rows.row(j));
      if (sim > best_sim) {
        best_sim = sim;
        best = j;
      }
    }
    CHECK(par[i].src == i);
    CHECK(par[i].dst == best);
    CHECK(par[i].score == doctest::Approx(best_sim));
    CHECK(ser[i].dst == par[i].dst);
  }

  FeatureMap empty;
  empty.rows.resize(0, 6);
  CHECK_THROWS_AS(match_features(empty, b), EmptyInput);
  FeatureMap wrong;
  wrong.rows = Eigen::MatrixXd::Ones(3, 5);
  CHECK_THROWS_AS(match_features(a, wrong), ShapeMismatch);
}

TEST_CASE("match_features duplicate rows take the lowest target index") {
  FeatureMap a, b;
  a.rows = Eigen::MatrixXd::Zero(1, 3);
  a.rows(0, 0) = 1.0;
  b.rows = Eigen::MatrixXd::Zero(4, 3);
  b.rows(0, 1) = 1.0;
  b.rows(1, 0) = 1.0;
  b.rows(2, 0) = 1.0;
  b.rows(3, 2) = 1.0;
  CHECK(match_features(a, b)[0].dst == 1);
}

TEST_CASE("matching is invariant under a shared orthogonal rotation of features") {
  const PointCloud cloud_s = random_cloud(80, 21);
  const PointCloud cloud_t = random_cloud(90, 22);
  const auto ds = describe(cloud_s);
  const auto dt = describe(cloud_t);
  const EmbeddingParams params = EmbeddingParams::random_init(8, 3);
  const CorrespondenceSet base = match_features(embed(ds, params), embed(dt, params));

  // rotate the 8-d feature space by an orthogonal Q: cosine order is preserved
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd m(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) m(i, j) = gauss(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  EmbeddingParams rotated;
  rotated.weight = q * params.weight;
  rotated.bias = q * params.bias;
  const CorrespondenceSet rot = match_features(embed(ds, rotated), embed(dt, rotated));
  REQUIRE(rot.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(rot[i].dst == base[i].dst);
}

TEST_CASE("hardest-contrastive loss on a hand-built instance") {
  // Three orthogonal descriptors, identity-like embedding restricted to 3 dims.
  std::vector<Descriptor> descs(3, Descriptor::Zero());
  descs[0](0) = 1.0;
  descs[1](1) = 1.0;
  descs[2](2) = 1.0;
  EmbeddingParams params = EmbeddingParams::zeros(3);
  params.weight(0, 0) = params.weight(1, 1) = params.weight(2, 2) = 1.0;

  // Positive pair (0,0): P_pos = 0. Hardest negative of orthogonal unit
  // vectors: P_neg = 2. Per direction: [1 + 0 - 2]+ = 0, so loss is zero.
  const CorrespondenceSet c_st = {{0, 0, 0.0}};
  const CorrespondenceSet c_ts = {{0, 0, 0.0}};
  LossConfig cfg;
  std::mt19937_64 rng(1);
  const LossGrad zero_grad =
      hardest_contrastive_loss(descs, descs, params, c_st, c_ts, cfg, rng);
  CHECK(zero_grad.loss == doctest::Approx(0.0));
  CHECK(zero_grad.d_weight.norm() == doctest::Approx(0.0));

  // Mismatched pair (0,1): P_pos = 2, P_neg = 0 (negative 0 equals the anchor).
  // Per direction: [1 + 2 - 0]+ = 3, summed over both directions: 6.
  const CorrespondenceSet bad_st = {{0, 1, 0.0}};
  const CorrespondenceSet bad_ts = {{1, 0, 0.0}};
  const LossGrad big =
      hardest_contrastive_loss(descs, descs, params, bad_st, bad_ts, cfg, rng);
  CHECK(big.loss == doctest::Approx(6.0));
  CHECK(big.d_weight.norm() > 0.0);

  CHECK_THROWS_AS(hardest_contrastive_loss(descs, descs, params, {}, c_ts, cfg, rng),
                  EmptyCorrespondences);
  const CorrespondenceSet oob = {{0, 9, 0.0}};
  CHECK_THROWS_AS(hardest_contrastive_loss(descs, descs, params, oob, c_ts, cfg, rng),
                  OutOfRange);
}

TEST_CASE("loss gradient matches finite differences") {
  std::mt19937_64 data_rng(6);
  std::normal_distribution<double> gauss;
  const int k = 5;
  const double eps = 1e-6;

  for (int inst = 0; inst < 20; ++inst) {
    const int ns = 12, nt = 14;
    std::vector<Descriptor> ds(ns), dt(nt);
    for (auto& d : ds)
      for (int j = 0; j < kDescriptorDims; ++j) d(j) = gauss(data_rng);
    for (auto& d : dt)
      for (int j = 0; j < kDescriptorDims; ++j) d(j) = gauss(data_rng);
    CorrespondenceSet c_st, c_ts;
    for (int i = 0; i < 6; ++i) {
      c_st.push_back({i, (i * 2) % nt, 0.0});
      c_ts.push_back({(i * 2) % nt, i, 0.0});
    }
    EmbeddingParams params = EmbeddingParams::random_init(k, 100 + inst);
    LossConfig cfg;
    cfg.margin = 0.4;

    // fixed pool draw: reuse an identically seeded rng for every evaluation
    const auto eval = [&](const EmbeddingParams& p) {
      std::mt19937_64 rng(77);
      return hardest_contrastive_loss(ds, dt, p, c_st, c_ts, cfg, rng);
    };
    const LossGrad grad = eval(params);

    double max_err = 0.0;
    for (int probe = 0; probe < 6; ++probe) {
      const int r = probe % k;
      const int c = (probe * 5) % kDescriptorDims;
      EmbeddingParams plus = params, minus = params;
      plus.weight(r, c) += eps;
      minus.weight(r, c) -= eps;
      const double fd = (eval(plus).loss - eval(minus).loss) / (2 * eps);
      max_err = std::max(max_err, std::abs(fd - grad.d_weight(r, c)));

      EmbeddingParams bplus = params, bminus = params;
      bplus.bias(r) += eps;
      bminus.bias(r) -= eps;
      const double fdb = (eval(bplus).loss - eval(bminus).loss) / (2 * eps);
      max_err = std::max(max_err, std::abs(fdb - grad.d_bias(r)));
    }
    CHECK(max_err < 1e-5);
  }
}

TEST_CASE("sgd_step applies the decayed gradient") {
  EmbeddingParams params = EmbeddingParams::zeros(2);
  params.weight(0, 0) = 1.0;
  params.bias(1) = 2.0;
  LossGrad grad;
  grad.d_weight = Eigen::MatrixXd::Zero(2, kDescriptorDims);
  grad.d_weight(0, 0) = 10.0;
  grad.d_bias = Eigen::VectorXd::Zero(2);
  grad.d_bias(1) = 4.0;
  LossConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.01;
  sgd_step(params, grad, cfg);
  CHECK(params.weight(0, 0) == doctest::Approx(1.0 - 0.1 * (10.0 + 0.01 * 1.0)));
  CHECK(params.bias(1) == doctest::Approx(2.0 - 0.1 * (4.0 + 0.01 * 2.0)));

  LossGrad bad;
  bad.d_weight = Eigen::MatrixXd::Zero(3, kDescriptorDims);
  bad.d_bias = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(sgd_step(params, bad, cfg), ShapeMismatch);
}

TEST_CASE("checkpoint round-trip") {
  const EmbeddingParams student = EmbeddingParams::random_init(32, 9);
  const EmbeddingParams labeler = EmbeddingParams::random_init(32, 10);
  const std::string path = (fs::temp_directory_path() / "eyoc_ckpt_test.eyoc").string();
  save_checkpoint(student, labeler, path);

  EmbeddingParams s2, l2;
  load_checkpoint(s2, l2, path);
  CHECK((s2.weight - student.weight).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s2.bias - student.bias).cwiseAbs().maxCoeff() == 0.0);
  CHECK((l2.weight - labeler.weight).cwiseAbs().maxCoeff() == 0.0);
  CHECK((l2.bias - labeler.bias).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(load_checkpoint(s2, l2, "/nonexistent.eyoc"), IoError);

  // corrupt magic
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS_AS(load_checkpoint(s2, l2, path), MalformedFile);
  fs::remove(path);
}
