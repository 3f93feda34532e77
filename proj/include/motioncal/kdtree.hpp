#pragma once

#include <Eigen/Core>
#include <vector>

namespace motioncal {

// Static 3D kd-tree over a point array. Build once, query from any thread.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(const std::vector<Eigen::Vector3d>& points);

  // Indices of the k nearest points to q, closest first.
  std::vector<int> knn(const Eigen::Vector3d& q, int k) const;

  // Index of the single nearest point, -1 when empty. Distance written to
  // dist_sq when non-null.
  int nearest(const Eigen::Vector3d& q, double* dist_sq = nullptr) const;

  std::size_t size() const { return pts_.size(); }

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
    int axis = 0;
    double split = 0.0;
  };

  int build(int begin, int end);
  template <typename Visitor>
  void search(int node, const Eigen::Vector3d& q, Visitor& visitor) const;

  std::vector<Eigen::Vector3d> pts_;
  std::vector<int> index_;  // permutation partitioned by the nodes
  std::vector<Node> nodes_;
  int root_ = -1;
  static constexpr int kLeafSize = 16;
};

}  // namespace motioncal
