#include "motioncal/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace motioncal {

KdTree::KdTree(const std::vector<Eigen::Vector3d>& points) : pts_(points) {
  index_.resize(pts_.size());
  for (std::size_t i = 0; i < index_.size(); ++i) index_[i] = static_cast<int>(i);
  if (!pts_.empty()) {
    nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<int>(pts_.size()));
  }
}

int KdTree::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, -1, begin, end, 0, 0.0});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = pts_[index_[begin]];
  Eigen::Vector3d hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(pts_[index_[i]]);
    hi = hi.cwiseMax(pts_[index_[i]]);
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + begin, index_.begin() + mid,
                   index_.begin() + end, [&](int a, int b) {
                     return pts_[a][axis] != pts_[b][axis]
                                ? pts_[a][axis] < pts_[b][axis]
                                : a < b;
                   });

  nodes_[id].axis = axis;
  nodes_[id].split = pts_[index_[mid]][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

namespace {

struct KnnVisitor {
  int k;
  // max-heap of (dist_sq, index); ties resolve to the smaller index
  std::priority_queue<std::pair<double, int>> heap;

  double worst() const {
    return heap.size() < static_cast<std::size_t>(k)
               ? std::numeric_limits<double>::infinity()
               : heap.top().first;
  }
  void offer(double d2, int idx) {
    if (heap.size() < static_cast<std::size_t>(k)) {
      heap.emplace(d2, idx);
    } else if (std::make_pair(d2, idx) < heap.top()) {
      heap.pop();
      heap.emplace(d2, idx);
    }
  }
};

struct NearestVisitor {
  double best = std::numeric_limits<double>::infinity();
  int best_idx = -1;

  double worst() const { return best; }
  void offer(double d2, int idx) {
    if (d2 < best || (d2 == best && idx < best_idx)) {
      best = d2;
      best_idx = idx;
    }
  }
};

}  // namespace

template <typename Visitor>
void KdTree::search(int node_id, const Eigen::Vector3d& q, Visitor& visitor) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = index_[i];
      visitor.offer((pts_[idx] - q).squaredNorm(), idx);
    }
    return;
  }
  const double delta = q[node.axis] - node.split;
  const int near = delta < 0.0 ? node.left : node.right;
  const int far = delta < 0.0 ? node.right : node.left;
  search(near, q, visitor);
  if (delta * delta <= visitor.worst()) search(far, q, visitor);
}

std::vector<int> KdTree::knn(const Eigen::Vector3d& q, int k) const {
  std::vector<int> out;
  if (root_ < 0 || k <= 0) return out;
  KnnVisitor visitor;
  visitor.k = std::min<int>(k, static_cast<int>(pts_.size()));
  search(root_, q, visitor);
  out.resize(visitor.heap.size());
  for (int i = static_cast<int>(out.size()) - 1; i >= 0; --i) {
    out[i] = visitor.heap.top().second;
    visitor.heap.pop();
  }
  return out;
}

int KdTree::nearest(const Eigen::Vector3d& q, double* dist_sq) const {
  if (root_ < 0) return -1;
  NearestVisitor visitor;
  search(root_, q, visitor);
  if (dist_sq) *dist_sq = visitor.best;
  return visitor.best_idx;
}

}  // namespace motioncal
