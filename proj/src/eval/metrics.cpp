#include "mf/eval/metrics.h"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "mf/error.h"
#include "mf/eval/kdtree.h"

namespace mf::eval {

// ---------------------------------------------------------------------------
// KdTree3

KdTree3::KdTree3(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(0, static_cast<int>(points_.size()), 0);
}

int KdTree3::build(int begin, int end, int depth) {
  if (begin >= end) return -1;
  const int axis = depth % 3;
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  Node node;
  node.point = order_[mid];
  node.axis = axis;
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  nodes_[self].left = build(begin, mid, depth + 1);
  nodes_[self].right = build(mid + 1, end, depth + 1);
  return self;
}

void KdTree3::search(int node, const Eigen::Vector3d& q, Hit& best) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Eigen::Vector3d& p = points_[n.point];
  const double d2 = (p - q).squaredNorm();
  if (best.index < 0 || d2 < best.dist2) {
    best.index = n.point;
    best.dist2 = d2;
  }
  const double delta = q[n.axis] - p[n.axis];
  const int near = delta < 0 ? n.left : n.right;
  const int far = delta < 0 ? n.right : n.left;
  search(near, q, best);
  if (best.index < 0 || delta * delta < best.dist2) search(far, q, best);
}

KdTree3::Hit KdTree3::nearest(const Eigen::Vector3d& q) const {
  Hit best;
  search(root_, q, best);
  return best;
}

// ---------------------------------------------------------------------------
// Trajectory metrics

Se3Pose align_point_sets(const std::vector<Eigen::Vector3d>& from,
                         const std::vector<Eigen::Vector3d>& to) {
  if (from.size() != to.size() || from.empty())
    throw Error("align_point_sets: size mismatch or empty input");
  Eigen::Vector3d cf = Eigen::Vector3d::Zero(), ct = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < from.size(); ++i) {
    cf += from[i];
    ct += to[i];
  }
  cf /= static_cast<double>(from.size());
  ct /= static_cast<double>(to.size());

  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < from.size(); ++i)
    H += (from[i] - cf) * (to[i] - ct).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d R = svd.matrixV() * svd.matrixU().transpose();
  if (R.determinant() < 0) {
    Eigen::Matrix3d V = svd.matrixV();
    V.col(2) = -V.col(2);
    R = V * svd.matrixU().transpose();
  }
  Se3Pose out(R, ct - R * cf);
  return out;
}

AteResult ate_rmse(const Trajectory& est, const Trajectory& gt) {
  std::map<int, Eigen::Vector3d> gt_at;
  for (const PoseRow& r : gt.poses) gt_at[r.first] = r.second.translation();

  std::vector<Eigen::Vector3d> pe, pg;
  for (const PoseRow& r : est.poses) {
    auto it = gt_at.find(r.first);
    if (it == gt_at.end()) continue;
    pe.push_back(r.second.translation());
    pg.push_back(it->second);
  }
  if (pe.size() < 2) throw Error("ate_rmse: fewer than 2 common timestamps");

  AteResult out;
  out.alignment = align_point_sets(pe, pg);
  double sum2 = 0;
  out.per_frame_errors.reserve(pe.size());
  for (size_t i = 0; i < pe.size(); ++i) {
    const double e = (pg[i] - out.alignment * pe[i]).norm();
    out.per_frame_errors.push_back(e);
    sum2 += e * e;
  }
  out.rmse_m = std::sqrt(sum2 / static_cast<double>(pe.size()));
  return out;
}

// ---------------------------------------------------------------------------
// Segmentation metric

IouReport label_iou(const std::vector<LabelImage>& est_masks,
                    const std::vector<LabelImage>& gt_masks) {
  if (est_masks.size() != gt_masks.size())
    throw Error("label_iou: sequence lengths differ");
  IouReport report;
  std::set<int> gt_taken;

  const size_t frames = est_masks.size();
  for (size_t f = 0; f < frames; ++f) {
    const LabelImage& est = est_masks[f];
    const LabelImage& gt = gt_masks[f];
    if (est.width() != gt.width() || est.height() != gt.height())
      throw Error("label_iou: mask dimensions differ at frame " + std::to_string(f));

    // Greedy matching for labels seen for the first time.
    std::map<std::pair<int, int>, size_t> overlap;
    std::map<int, size_t> est_area, gt_area;
    for (size_t i = 0; i < est.size(); ++i) {
      const int e = est[i], g = gt[i];
      if (e != 255) ++est_area[e];
      if (g != 255) ++gt_area[g];
      if (e != 255 && g != 255) ++overlap[{e, g}];
    }
    struct Cand {
      size_t inter;
      int e, g;
    };
    std::vector<Cand> cands;
    for (const auto& [key, inter] : overlap)
      if (!report.est_to_gt.count(key.first) && !gt_taken.count(key.second))
        cands.push_back({inter, key.first, key.second});
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.inter != b.inter) return a.inter > b.inter;
      return std::tie(a.e, a.g) < std::tie(b.e, b.g);
    });
    for (const Cand& c : cands) {
      if (report.est_to_gt.count(c.e) || gt_taken.count(c.g)) continue;
      report.est_to_gt[c.e] = c.g;
      gt_taken.insert(c.g);
    }

    for (const auto& [e, g] : report.est_to_gt) {
      const size_t inter = overlap.count({e, g}) ? overlap[{e, g}] : 0;
      const size_t uni = est_area[e] + gt_area[g] - inter;
      if (uni == 0) continue;  // label absent on both sides this frame
      report.per_frame[e].emplace_back(static_cast<int>(f),
                                       static_cast<double>(inter) / uni);
    }
  }

  for (const auto& [e, series] : report.per_frame) {
    double sum = 0;
    for (const auto& [t, v] : series) sum += v;
    report.mean[e] = series.empty() ? 0.0 : sum / series.size();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Reconstruction metric

ReconStats reconstruction_error(const std::vector<Eigen::Vector3d>& model_cloud,
                                const std::vector<Eigen::Vector3d>& gt_cloud) {
  if (model_cloud.empty() || gt_cloud.empty())
    throw Error("reconstruction_error: empty cloud");

  const KdTree3 tree(gt_cloud);

  // Rigid ICP refinement from identity.
  Se3Pose T;
  double prev_rms = std::numeric_limits<double>::max();
  int rising = 0;
  bool aligned = true;
  Se3Pose best_T = T;
  double best_rms = std::numeric_limits<double>::max();
  for (int iter = 0; iter < 30; ++iter) {
    std::vector<Eigen::Vector3d> src, dst;
    src.reserve(model_cloud.size());
    double sum2 = 0;
    for (const Eigen::Vector3d& p : model_cloud) {
      const Eigen::Vector3d q = T * p;
      const KdTree3::Hit hit = tree.nearest(q);
      src.push_back(p);
      dst.push_back(gt_cloud[hit.index]);
      sum2 += hit.dist2;
    }
    const double rms = std::sqrt(sum2 / static_cast<double>(model_cloud.size()));
    if (rms < best_rms) {
      best_rms = rms;
      best_T = T;
    }
    if (rms > prev_rms) {
      if (++rising >= 3) {
        aligned = false;
        break;
      }
    } else {
      rising = 0;
    }
    if (prev_rms - rms < 1e-9 && iter > 0) break;
    prev_rms = rms;
    T = align_point_sets(src, dst);
  }
  if (!aligned) best_T = Se3Pose();  // report unaligned distances

  ReconStats stats;
  stats.aligned = aligned;
  std::vector<double> dist;
  dist.reserve(model_cloud.size());
  for (const Eigen::Vector3d& p : model_cloud) {
    const KdTree3::Hit hit = tree.nearest(best_T * p);
    dist.push_back(std::sqrt(hit.dist2));
  }
  const double n = static_cast<double>(dist.size());
  stats.mean_m = std::accumulate(dist.begin(), dist.end(), 0.0) / n;
  double var = 0;
  int over1 = 0, over5 = 0;
  for (double d : dist) {
    var += (d - stats.mean_m) * (d - stats.mean_m);
    if (d > 0.01) ++over1;
    if (d > 0.05) ++over5;
  }
  stats.std_m = std::sqrt(var / n);
  stats.outlier_1cm = over1 / n;
  stats.outlier_5cm = over5 / n;
  return stats;
}

}  // namespace mf::eval
