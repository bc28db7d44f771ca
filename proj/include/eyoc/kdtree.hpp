#pragma once

#include <vector>

#include "eyoc/geom.hpp"

namespace eyoc {

/// Static 3D KD-tree over a point set. Ties on equal distance resolve to the
/// lowest point index so queries stay deterministic.
class KdTree {
 public:
  explicit KdTree(const std::vector<Point3>& points);

  /// Index of the nearest point, or -1 on an empty tree.
  int nearest(const Point3& query, double* out_dist = nullptr) const;

  /// Indices of all points within radius (inclusive), ascending.
  std::vector<int> radius(const Point3& query, double r) const;

  std::size_t size() const { return pts_.size(); }

 private:
  struct Node {
    int index = -1;     // point index at this node
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<int>& idx, int lo, int hi, int depth);
  void nearest_rec(int node, const Point3& q, int& best, double& best_d2) const;
  void radius_rec(int node, const Point3& q, double r2, std::vector<int>& out) const;

  std::vector<Point3> pts_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace eyoc
