#include "mf/seg/crf.h"

#include <cmath>

#include "mf/error.h"

namespace mf {

double pairwise_kernel(const Eigen::Matrix<double, 6, 1>& fi,
                       const Eigen::Matrix<double, 6, 1>& fj, const CrfParams& params) {
  const double dx = fi[0] - fj[0], dy = fi[1] - fj[1];
  const double pos2 = dx * dx + dy * dy;
  const double col2 = (fi.segment<3>(2) - fj.segment<3>(2)).squaredNorm();

  double e1 = pos2 / (2 * params.theta_alpha * params.theta_alpha) +
              col2 / (2 * params.theta_beta * params.theta_beta);
  if (fi[5] > 0 && fj[5] > 0) {
    const double dd = fi[5] - fj[5];
    e1 += dd * dd / (2 * params.theta_gamma * params.theta_gamma);
  }
  const double e2 = pos2 / (2 * params.theta_delta * params.theta_delta);
  return params.omega1 * std::exp(-e1) + params.omega2 * std::exp(-e2);
}

Labeling crf_meanfield(const Eigen::MatrixXd& unary, const SuperpixelGraph& graph,
                       const CrfParams& params, const std::vector<uint8_t>& label_ids) {
  const int S = static_cast<int>(unary.rows());
  const int L = static_cast<int>(unary.cols());
  if (S != graph.count()) throw Error("crf_meanfield: unary rows != superpixel count");
  if (L != static_cast<int>(label_ids.size()))
    throw Error("crf_meanfield: label_ids size != unary columns");
  if (!unary.allFinite()) throw Error("crf_meanfield: non-finite unary costs");

  // Dense kernel matrix with zero diagonal (no self messages).
  Eigen::MatrixXd Kmat(S, S);
  std::vector<Eigen::Matrix<double, 6, 1>> feats(S);
  for (int i = 0; i < S; ++i) feats[i] = graph.superpixels[i].feature();
  for (int i = 0; i < S; ++i) {
    Kmat(i, i) = 0;
    for (int j = i + 1; j < S; ++j) {
      const double k = pairwise_kernel(feats[i], feats[j], params);
      Kmat(i, j) = k;
      Kmat(j, i) = k;
    }
  }
  if (params.normalize_kernel && S > 1) {
    const double mass = Kmat.sum() / S;
    if (mass > 0) Kmat /= mass;
  }

  // Initialize marginals with the unary softmax.
  Eigen::MatrixXd Q(S, L);
  for (int i = 0; i < S; ++i) {
    const double m = unary.row(i).minCoeff();
    Eigen::ArrayXd p = (-(unary.row(i).array() - m)).exp();
    Q.row(i) = p / p.sum();
  }

  for (int iter = 0; iter < params.meanfield_iters; ++iter) {
    // message(i, l) = sum_j K_ij Q_j(l)
    const Eigen::MatrixXd message = Kmat * Q;
    // Potts: cost of label l is mu * sum_{l' != l} message(i, l')
    const Eigen::VectorXd total = message.rowwise().sum();
    for (int i = 0; i < S; ++i) {
      Eigen::ArrayXd cost =
          unary.row(i).transpose().array() +
          params.potts_mu * (total[i] - message.row(i).transpose().array());
      const double m = cost.minCoeff();
      Eigen::ArrayXd p = (-(cost - m)).exp();
      Q.row(i) = p / p.sum();
    }
  }

  Labeling out;
  out.soft = std::move(Q);
  out.label_ids = label_ids;
  out.hard.resize(S);
  for (int i = 0; i < S; ++i) {
    int best;
    out.soft.row(i).maxCoeff(&best);
    out.hard[i] = best;
  }
  out.pixel_labels = LabelImage(graph.width, graph.height, kOutlierId);
  for (int i = 0; i < S; ++i) {
    const uint8_t id = label_ids[out.hard[i]];
    for (int px : graph.superpixels[i].pixels) out.pixel_labels[px] = id;
  }
  return out;
}

double crf_energy(const Eigen::MatrixXd& unary, const SuperpixelGraph& graph,
                  const CrfParams& params, const std::vector<int>& labels) {
  const int S = static_cast<int>(unary.rows());
  double scale = 1.0;
  if (params.normalize_kernel && S > 1) {
    double mass = 0;
    for (int i = 0; i < S; ++i)
      for (int j = 0; j < S; ++j)
        if (i != j)
          mass += pairwise_kernel(graph.superpixels[i].feature(),
                                  graph.superpixels[j].feature(), params);
    if (mass > 0) scale = S / mass;
  }
  double e = 0;
  for (int i = 0; i < S; ++i) e += unary(i, labels[i]);
  for (int i = 0; i < S; ++i)
    for (int j = i + 1; j < S; ++j)
      if (labels[i] != labels[j])
        e += scale * params.potts_mu *
             pairwise_kernel(graph.superpixels[i].feature(), graph.superpixels[j].feature(),
                             params);
  return e;
}

}  // namespace mf
