#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "eyoc/geom.hpp"

namespace eyoc {

/// Dense symmetric |C| x |C| compatibility matrix: binary first-order
/// entries or integer-valued SC2 counts. Diagonal is zero.
using CompatibilityMatrix = Eigen::MatrixXd;

struct RegistrarConfig {
  double comp_thresh_m = 0.6;    // length-difference test
  int num_seeds = 10;
  int power_iters = 20;
  double inlier_thresh_m = 0.6;  // hypothesis scoring
  int max_corrs = 1000;          // subsample beyond this
  std::uint64_t seed = 0;
};

struct RegistrationOutput {
  Pose pose;
  std::vector<bool> inlier_mask;  // over the input correspondence set
  int confidence = 0;             // inlier count
};

/// Binary first-order compatibility: 1 iff the source/target segment lengths
/// differ by strictly less than comp_thresh.
CompatibilityMatrix first_order(const CorrespondenceSet& corr, const PointCloud& src,
                                const PointCloud& dst, double comp_thresh);

/// Second-order measure: entry (x,y) = M_xy * (M^2)_xy, the number of common
/// compatible neighbors when x and y are compatible.
CompatibilityMatrix sc2(const CompatibilityMatrix& binary);

namespace serial {
CompatibilityMatrix first_order(const CorrespondenceSet& corr, const PointCloud& src,
                                const PointCloud& dst, double comp_thresh);
CompatibilityMatrix sc2(const CompatibilityMatrix& binary);
}  // namespace serial

/// Leading eigenvector by power iteration, unit norm, first nonzero entry
/// made non-negative for sign stability.
Eigen::VectorXd power_iteration(const Eigen::MatrixXd& mat, int iters);

/// SC2-PCR pipeline: spectral seed selection, per-seed weighted SVD
/// hypotheses, consensus scoring, one refit on the best consensus.
RegistrationOutput register_sc2pcr(const CorrespondenceSet& corr, const PointCloud& src,
                                   const PointCloud& dst, const RegistrarConfig& cfg);

/// Three-point RANSAC baseline with final refit on the best consensus.
RegistrationOutput register_ransac(const CorrespondenceSet& corr, const PointCloud& src,
                                   const PointCloud& dst, int iters, double inlier_thresh,
                                   std::uint64_t seed = 0);

}  // namespace eyoc
