#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "mf/image.h"
#include "mf/seg/superpixels.h"

namespace mf {

/// Label id reserved for the outlier class in pixel label maps.
inline constexpr uint8_t kOutlierId = 255;

/// Fully connected CRF over superpixels with two Gaussian kernels:
///   k1 over (position/theta_alpha, color/theta_beta, depth/theta_gamma)
///   k2 over (position/theta_delta)
/// and a Potts label compatibility with penalty potts_mu.
struct CrfParams {
  double theta_alpha = 30.0;  // pixels
  double theta_beta = 20.0;   // color levels
  double theta_gamma = 0.3;   // meters
  double theta_delta = 60.0;  // pixels
  double omega1 = 1.0;
  double omega2 = 1.0;
  double potts_mu = 1.0;
  int meanfield_iters = 10;

  // Divide the kernel matrix by its mean row sum, making the total pairwise
  // message mass O(potts_mu) independent of the superpixel count. The
  // pipeline enables this; leave off to optimize the raw model.
  bool normalize_kernel = false;
};

struct Labeling {
  Eigen::MatrixXd soft;            // S x L marginals, rows sum to 1 (empty for mask input)
  std::vector<int> hard;           // per-superpixel argmax column
  std::vector<uint8_t> label_ids;  // column -> model id; last column is the outlier
  LabelImage pixel_labels;         // expanded hard assignment

  int label_count() const { return static_cast<int>(label_ids.size()); }
};

/// omega1 k1 + omega2 k2 between two superpixel features; the depth term is
/// dropped when either superpixel has no valid depth.
double pairwise_kernel(const Eigen::Matrix<double, 6, 1>& fi,
                       const Eigen::Matrix<double, 6, 1>& fj, const CrfParams& params);

/// Exact dense mean-field inference (O(S^2) per iteration). `unary` holds
/// per-superpixel label costs, one column per entry of `label_ids` whose last
/// element must be the outlier id.
Labeling crf_meanfield(const Eigen::MatrixXd& unary, const SuperpixelGraph& graph,
                       const CrfParams& params, const std::vector<uint8_t>& label_ids);

/// Total CRF energy of a hard labeling (sum of unaries plus pairwise Potts
/// costs over all superpixel pairs); the exhaustive-search oracle target.
double crf_energy(const Eigen::MatrixXd& unary, const SuperpixelGraph& graph,
                  const CrfParams& params, const std::vector<int>& labels);

}  // namespace mf
