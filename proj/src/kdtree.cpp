#include "eyoc/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace eyoc {

KdTree::KdTree(const std::vector<Point3>& points) : pts_(points) {
  if (pts_.empty()) return;
  std::vector<int> idx(pts_.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(pts_.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree::build(std::vector<int>& idx, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const int mid = (lo + hi) / 2;
  std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                   [&](int a, int b) {
                     if (pts_[a](axis) != pts_[b](axis)) return pts_[a](axis) < pts_[b](axis);
                     return a < b;
                   });
  const int node_id = static_cast<int>(nodes_.size());
  nodes_.push_back({idx[mid], axis, -1, -1});
  const int left = build(idx, lo, mid, depth + 1);
  const int right = build(idx, mid + 1, hi, depth + 1);
  nodes_[node_id].left = left;
  nodes_[node_id].right = right;
  return node_id;
}

void KdTree::nearest_rec(int node, const Point3& q, int& best, double& best_d2) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Point3& p = pts_[n.index];
  const double d2 = (p - q).squaredNorm();
  if (d2 < best_d2 || (d2 == best_d2 && n.index < best)) {
    best_d2 = d2;
    best = n.index;
  }
  const double delta = q(n.axis) - p(n.axis);
  const int near = delta < 0 ? n.left : n.right;
  const int far = delta < 0 ? n.right : n.left;
  nearest_rec(near, q, best, best_d2);
  if (delta * delta <= best_d2) nearest_rec(far, q, best, best_d2);
}

int KdTree::nearest(const Point3& query, double* out_dist) const {
  if (pts_.empty()) return -1;
  int best = std::numeric_limits<int>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  nearest_rec(root_, query, best, best_d2);
  if (out_dist) *out_dist = std::sqrt(best_d2);
  return best;
}

void KdTree::radius_rec(int node, const Point3& q, double r2, std::vector<int>& out) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Point3& p = pts_[n.index];
  if ((p - q).squaredNorm() <= r2) out.push_back(n.index);
  const double delta = q(n.axis) - p(n.axis);
  const int near = delta < 0 ? n.left : n.right;
  const int far = delta < 0 ? n.right : n.left;
  radius_rec(near, q, r2, out);
  if (delta * delta <= r2) radius_rec(far, q, r2, out);
}

std::vector<int> KdTree::radius(const Point3& query, double r) const {
  std::vector<int> out;
  if (pts_.empty()) return out;
  radius_rec(root_, query, r * r, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace eyoc
