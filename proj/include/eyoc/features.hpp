#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eyoc/geom.hpp"

namespace eyoc {

inline constexpr int kDescriptorDims = 16;

/// Handcrafted local statistics: covariance eigenvalue shape, density,
/// height, neighbor-distance stats. Computed in the sensor frame.
struct DescriptorConfig {
  double radius_m = 2.5;
};

using Descriptor = Eigen::Matrix<double, kDescriptorDims, 1>;

/// Trainable linear embedding, shared shape for student and labeler.
struct EmbeddingParams {
  Eigen::MatrixXd weight;  // k x 16
  Eigen::VectorXd bias;    // k

  static EmbeddingParams zeros(int k = 32);
  static EmbeddingParams random_init(int k, std::uint64_t seed);
  bool same_shape(const EmbeddingParams& other) const {
    return weight.rows() == other.weight.rows() && weight.cols() == other.weight.cols() &&
           bias.size() == other.bias.size();
  }
};

/// Row-per-point unit-norm feature vectors.
struct FeatureMap {
  Eigen::MatrixXd rows;  // n x k, each row unit norm
  int dim() const { return static_cast<int>(rows.cols()); }
  int size() const { return static_cast<int>(rows.rows()); }
};

struct LossConfig {
  double margin = 1.0;
  int negative_pool = 512;
  double learning_rate = 0.001;
  double weight_decay = 1e-4;
};

struct LossGrad {
  double loss = 0.0;
  Eigen::MatrixXd d_weight;
  Eigen::VectorXd d_bias;
};

std::vector<Descriptor> describe(const PointCloud& cloud, const DescriptorConfig& cfg = {});

/// rows_i = normalize(W * desc_i + b); zero-norm rows fall back to the first
/// basis direction.
FeatureMap embed(const std::vector<Descriptor>& descs, const EmbeddingParams& params);

/// Nearest target feature per source feature by cosine similarity,
/// lowest-index tie-break.
CorrespondenceSet match_features(const FeatureMap& f_src, const FeatureMap& f_dst);

namespace serial {
/// Single-threaded reference kernels, kept for testing and benchmarking.
std::vector<Descriptor> describe(const PointCloud& cloud, const DescriptorConfig& cfg = {});
CorrespondenceSet match_features(const FeatureMap& f_src, const FeatureMap& f_dst);
}  // namespace serial

/// Hardest-contrastive loss over both correspondence directions, with the
/// analytic gradient w.r.t. the student parameters. Both feature maps must be
/// the student's outputs on the given descriptors.
LossGrad hardest_contrastive_loss(const std::vector<Descriptor>& desc_s,
                                  const std::vector<Descriptor>& desc_t,
                                  const EmbeddingParams& student,
                                  const CorrespondenceSet& c_st,
                                  const CorrespondenceSet& c_ts, const LossConfig& cfg,
                                  std::mt19937_64& rng);

/// params <- params - lr * (grad + wd * params)
void sgd_step(EmbeddingParams& params, const LossGrad& grad, const LossConfig& cfg);

/// Versioned binary checkpoint holding student then labeler parameters.
void save_checkpoint(const EmbeddingParams& student, const EmbeddingParams& labeler,
                     const std::string& path);
void load_checkpoint(EmbeddingParams& student, EmbeddingParams& labeler,
                     const std::string& path);

}  // namespace eyoc
