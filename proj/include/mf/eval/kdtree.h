#pragma once

#include <Eigen/Core>
#include <vector>

namespace mf::eval {

/// Static 3-D k-d tree for nearest-neighbor queries.
class KdTree3 {
 public:
  explicit KdTree3(std::vector<Eigen::Vector3d> points);

  struct Hit {
    int index = -1;
    double dist2 = 0;
  };
  Hit nearest(const Eigen::Vector3d& query) const;

  size_t size() const { return points_.size(); }
  const std::vector<Eigen::Vector3d>& points() const { return points_; }

 private:
  struct Node {
    int left = -1, right = -1;
    int point = -1;
    int axis = 0;
  };
  int build(int begin, int end, int depth);
  void search(int node, const Eigen::Vector3d& q, Hit& best) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace mf::eval
