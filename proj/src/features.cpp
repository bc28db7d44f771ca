#include "eyoc/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

#include "eyoc/kdtree.hpp"

namespace eyoc {

EmbeddingParams EmbeddingParams::zeros(int k) {
  EmbeddingParams p;
  p.weight = Eigen::MatrixXd::Zero(k, kDescriptorDims);
  p.bias = Eigen::VectorXd::Zero(k);
  return p;
}

EmbeddingParams EmbeddingParams::random_init(int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(kDescriptorDims));
  EmbeddingParams p = zeros(k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < kDescriptorDims; ++j) p.weight(i, j) = gauss(rng);
  return p;
}

namespace {

Descriptor describe_point(const PointCloud& cloud, const KdTree& tree, int i,
                          const DescriptorConfig& cfg) {
  Descriptor d = Descriptor::Zero();
  const Point3& p = cloud.points[i];
  const auto nbrs = tree.radius(p, cfg.radius_m);  // includes the point itself

  // Isotropic defaults for degenerate neighborhoods.
  d(0) = d(1) = d(2) = 1.0 / 3.0;
  d(5) = 1.0;
  d(7) = 1.0;
  d(8) = 1.0 / 3.0;
  d(14) = p.z() / 5.0;
  d(15) = p.norm() / 100.0;
  if (nbrs.size() < 3) return d;

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (int j : nbrs) mean += cloud.points[j];
  mean /= static_cast<double>(nbrs.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double dist_sum = 0.0, dist_sq_sum = 0.0;
  int others = 0;
  for (int j : nbrs) {
    const Eigen::Vector3d c = cloud.points[j] - mean;
    cov += c * c.transpose();
    if (j != i) {
      const double dist = (cloud.points[j] - p).norm();
      dist_sum += dist;
      dist_sq_sum += dist * dist;
      ++others;
    }
  }
  cov /= static_cast<double>(nbrs.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  // Ascending from Eigen; use descending l1 >= l2 >= l3.
  const double l1 = std::max(es.eigenvalues()(2), 0.0);
  const double l2 = std::max(es.eigenvalues()(1), 0.0);
  const double l3 = std::max(es.eigenvalues()(0), 0.0);
  const double lsum = l1 + l2 + l3;
  if (lsum > 1e-12 && l1 > 1e-12) {
    d(0) = l1 / lsum;
    d(1) = l2 / lsum;
    d(2) = l3 / lsum;
    d(3) = (l1 - l2) / l1;
    d(4) = (l2 - l3) / l1;
    d(5) = l3 / l1;
    d(6) = (l1 - l3) / l1;
    d(7) = std::abs(es.eigenvectors().col(0).z());  // surface verticality
    d(8) = l3 / lsum;
  }

  const double volume =
      4.0 / 3.0 * std::numbers::pi * cfg.radius_m * cfg.radius_m * cfg.radius_m;
  d(9) = std::log1p(static_cast<double>(others) / volume);
  d(10) = std::log1p(static_cast<double>(others)) / 5.0;
  if (others > 0) {
    const double dist_mean = dist_sum / others;
    const double var = std::max(dist_sq_sum / others - dist_mean * dist_mean, 0.0);
    d(11) = dist_mean / cfg.radius_m;
    d(12) = std::sqrt(var) / cfg.radius_m;
  }
  d(13) = (mean - p).norm() / cfg.radius_m;
  return d;
}

template <bool Parallel>
std::vector<Descriptor> describe_impl(const PointCloud& cloud, const DescriptorConfig& cfg) {
  if (cloud.empty()) throw EmptyInput("describe: empty cloud");
  const KdTree tree(cloud.points);
  const int n = static_cast<int>(cloud.size());
  std::vector<Descriptor> out(n);
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (int i = 0; i < n; ++i) out[i] = describe_point(cloud, tree, i, cfg);
  } else {
    for (int i = 0; i < n; ++i) out[i] = describe_point(cloud, tree, i, cfg);
  }
  return out;
}

int best_match_row(const FeatureMap& f_src, const FeatureMap& f_dst, int i, double* out_sim) {
  int best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < f_dst.size(); ++j) {
    const double sim = f_src.rows.row(i).dot(f_dst.rows.row(j));
    if (sim > best_sim) {
      best_sim = sim;
      best = j;
    }
  }
  *out_sim = best_sim;
  return best;
}

template <bool Parallel>
CorrespondenceSet match_impl(const FeatureMap& f_src, const FeatureMap& f_dst) {
  if (f_src.size() == 0 || f_dst.size() == 0) throw EmptyInput("match_features: empty map");
  if (f_src.dim() != f_dst.dim()) throw ShapeMismatch("match_features: dim mismatch");
  CorrespondenceSet out(f_src.size());
  const int n = f_src.size();
  if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double sim;
      const int j = best_match_row(f_src, f_dst, i, &sim);
      out[i] = {i, j, sim};
    }
  } else {
    for (int i = 0; i < n; ++i) {
      double sim;
      const int j = best_match_row(f_src, f_dst, i, &sim);
      out[i] = {i, j, sim};
    }
  }
  return out;
}

}  // namespace

std::vector<Descriptor> describe(const PointCloud& cloud, const DescriptorConfig& cfg) {
  return describe_impl<true>(cloud, cfg);
}

CorrespondenceSet match_features(const FeatureMap& f_src, const FeatureMap& f_dst) {
  return match_impl<true>(f_src, f_dst);
}

namespace serial {
std::vector<Descriptor> describe(const PointCloud& cloud, const DescriptorConfig& cfg) {
  return describe_impl<false>(cloud, cfg);
}
CorrespondenceSet match_features(const FeatureMap& f_src, const FeatureMap& f_dst) {
  return match_impl<false>(f_src, f_dst);
}
}  // namespace serial

FeatureMap embed(const std::vector<Descriptor>& descs, const EmbeddingParams& params) {
  if (params.weight.cols() != kDescriptorDims || params.weight.rows() != params.bias.size())
    throw ShapeMismatch("embed: bad parameter shape");
  FeatureMap fm;
  const int n = static_cast<int>(descs.size());
  const int k = static_cast<int>(params.bias.size());
  fm.rows.resize(n, k);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd g = params.weight * descs[i] + params.bias;
    const double norm = g.norm();
    if (norm > 1e-12) {
      fm.rows.row(i) = (g / norm).transpose();
    } else {
      fm.rows.row(i).setZero();
      fm.rows(i, 0) = 1.0;  // unit fallback direction
    }
  }
  return fm;
}

namespace {

struct ForwardState {
  Eigen::MatrixXd prenorm;   // n x k
  Eigen::VectorXd norms;     // n
  FeatureMap features;
};

ForwardState forward(const std::vector<Descriptor>& descs, const EmbeddingParams& params) {
  ForwardState st;
  const int n = static_cast<int>(descs.size());
  const int k = static_cast<int>(params.bias.size());
  st.prenorm.resize(n, k);
  st.norms.resize(n);
  st.features.rows.resize(n, k);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd g = params.weight * descs[i] + params.bias;
    st.prenorm.row(i) = g.transpose();
    const double norm = g.norm();
    st.norms(i) = norm;
    if (norm > 1e-12) {
      st.features.rows.row(i) = (g / norm).transpose();
    } else {
      st.features.rows.row(i).setZero();
      st.features.rows(i, 0) = 1.0;
    }
  }
  return st;
}

std::vector<int> sample_pool(int population, int pool, std::mt19937_64& rng) {
  const int take = std::min(pool, population);
  std::vector<int> idx(population);
  for (int i = 0; i < population; ++i) idx[i] = i;
  for (int i = 0; i < take; ++i) {
    std::uniform_int_distribution<int> dist(i, population - 1);
    std::swap(idx[i], idx[dist(rng)]);
  }
  idx.resize(take);
  return idx;
}

double sq_dist(const Eigen::MatrixXd& a, int i, const Eigen::MatrixXd& b, int j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

// One directional sum of the hardest-contrastive loss; accumulates df for both
// feature maps.
double directional_loss(const FeatureMap& f_a, const FeatureMap& f_b,
                        const CorrespondenceSet& corr, const std::vector<int>& pool_b,
                        double margin, Eigen::MatrixXd& df_a, Eigen::MatrixXd& df_b) {
  double sum = 0.0;
  const double inv = 1.0 / static_cast<double>(corr.size());
  for (const auto& c : corr) {
    if (c.src < 0 || c.src >= f_a.size() || c.dst < 0 || c.dst >= f_b.size())
      throw OutOfRange("hardest_contrastive_loss: correspondence index out of range");
    const double p_pos = sq_dist(f_a.rows, c.src, f_b.rows, c.dst);
    int hardest = -1;
    double p_neg = std::numeric_limits<double>::infinity();
    for (int k : pool_b) {
      if (k == c.dst) continue;
      const double p = sq_dist(f_a.rows, c.src, f_b.rows, k);
      if (p < p_neg) {
        p_neg = p;
        hardest = k;
      }
    }
    if (hardest < 0) continue;  // pool collapsed onto the positive
    const double term = margin + p_pos - p_neg;
    if (term <= 0.0) continue;
    sum += inv * term;
    // d(p_pos)/df = 2(fa - fb) and the mirrored negative term.
    const Eigen::RowVectorXd fa = f_a.rows.row(c.src);
    const Eigen::RowVectorXd fpos = f_b.rows.row(c.dst);
    const Eigen::RowVectorXd fneg = f_b.rows.row(hardest);
    df_a.row(c.src) += inv * 2.0 * (fneg - fpos);
    df_b.row(c.dst) += inv * 2.0 * (fpos - fa);
    df_b.row(hardest) += inv * 2.0 * (fa - fneg);
  }
  return sum;
}

void backprop_embedding(const std::vector<Descriptor>& descs, const ForwardState& st,
                        const Eigen::MatrixXd& df, LossGrad& grad) {
  const int n = static_cast<int>(descs.size());
  for (int i = 0; i < n; ++i) {
    const double norm = st.norms(i);
    if (norm <= 1e-12) continue;  // fallback direction, no gradient
    const Eigen::VectorXd f = st.features.rows.row(i).transpose();
    const Eigen::VectorXd dfi = df.row(i).transpose();
    const Eigen::VectorXd dg = (dfi - f * f.dot(dfi)) / norm;
    grad.d_weight += dg * descs[i].transpose();
    grad.d_bias += dg;
  }
}

}  // namespace

LossGrad hardest_contrastive_loss(const std::vector<Descriptor>& desc_s,
                                  const std::vector<Descriptor>& desc_t,
                                  const EmbeddingParams& student,
                                  const CorrespondenceSet& c_st,
                                  const CorrespondenceSet& c_ts, const LossConfig& cfg,
                                  std::mt19937_64& rng) {
  if (c_st.empty() || c_ts.empty())
    throw EmptyCorrespondences("hardest_contrastive_loss: empty correspondence set");
  const ForwardState fs = forward(desc_s, student);
  const ForwardState ft = forward(desc_t, student);

  const std::vector<int> pool_t =
      sample_pool(static_cast<int>(desc_t.size()), cfg.negative_pool, rng);
  const std::vector<int> pool_s =
      sample_pool(static_cast<int>(desc_s.size()), cfg.negative_pool, rng);

  Eigen::MatrixXd df_s = Eigen::MatrixXd::Zero(fs.features.size(), fs.features.dim());
  Eigen::MatrixXd df_t = Eigen::MatrixXd::Zero(ft.features.size(), ft.features.dim());

  LossGrad grad;
  grad.d_weight = Eigen::MatrixXd::Zero(student.weight.rows(), student.weight.cols());
  grad.d_bias = Eigen::VectorXd::Zero(student.bias.size());

  grad.loss = directional_loss(fs.features, ft.features, c_st, pool_t, cfg.margin, df_s, df_t);
  // C_TS stores (src=j in T, dst=i in S).
  grad.loss += directional_loss(ft.features, fs.features, c_ts, pool_s, cfg.margin, df_t, df_s);

  backprop_embedding(desc_s, fs, df_s, grad);
  backprop_embedding(desc_t, ft, df_t, grad);
  return grad;
}

void sgd_step(EmbeddingParams& params, const LossGrad& grad, const LossConfig& cfg) {
  if (grad.d_weight.rows() != params.weight.rows() ||
      grad.d_weight.cols() != params.weight.cols() || grad.d_bias.size() != params.bias.size())
    throw ShapeMismatch("sgd_step: gradient shape mismatch");
  params.weight -= cfg.learning_rate * (grad.d_weight + cfg.weight_decay * params.weight);
  params.bias -= cfg.learning_rate * (grad.d_bias + cfg.weight_decay * params.bias);
}

namespace {
constexpr char kMagic[4] = {'E', 'Y', 'O', 'C'};
constexpr std::uint32_t kVersion = 1;

void write_params(std::ofstream& out, const EmbeddingParams& p) {
  for (int i = 0; i < p.weight.rows(); ++i)
    for (int j = 0; j < p.weight.cols(); ++j) {
      const double v = p.weight(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  for (int i = 0; i < p.bias.size(); ++i) {
    const double v = p.bias(i);
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
}

void read_params(std::ifstream& in, EmbeddingParams& p, int k) {
  p = EmbeddingParams::zeros(k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < kDescriptorDims; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      p.weight(i, j) = v;
    }
  for (int i = 0; i < k; ++i) {
    double v;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    p.bias(i) = v;
  }
}
}  // namespace

void save_checkpoint(const EmbeddingParams& student, const EmbeddingParams& labeler,
                     const std::string& path) {
  if (!student.same_shape(labeler)) throw ShapeMismatch("save_checkpoint: shape mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  const std::uint32_t k = static_cast<std::uint32_t>(student.bias.size());
  const std::uint32_t dims = kDescriptorDims;
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&k), 4);
  out.write(reinterpret_cast<const char*>(&dims), 4);
  write_params(out, student);
  write_params(out, labeler);
  if (!out) throw IoError("write failed: " + path);
}

void load_checkpoint(EmbeddingParams& student, EmbeddingParams& labeler,
                     const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  std::uint32_t version = 0, k = 0, dims = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&k), 4);
  in.read(reinterpret_cast<char*>(&dims), 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw MalformedFile(path + ": bad checkpoint magic");
  if (version != kVersion) throw MalformedFile(path + ": unsupported checkpoint version");
  if (dims != kDescriptorDims) throw MalformedFile(path + ": descriptor dim mismatch");
  read_params(in, student, static_cast<int>(k));
  read_params(in, labeler, static_cast<int>(k));
  if (!in) throw MalformedFile(path + ": truncated checkpoint");
}

}  // namespace eyoc
