#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace cfs {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dot product used by every cosine comparison in the library, so the tree
/// and a plain scan see bit-identical similarities.
inline double unit_dot(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

/// Rows scaled to unit l2 norm; zero rows stay zero.
RowMatrix normalize_rows(const Eigen::MatrixXd& x);

struct Neighbor {
  std::size_t index = 0;
  double similarity = 0.0;
};

/// Exact maximum-cosine search over unit-norm (or zero) points. For unit
/// vectors |q - p|^2 = 2 - 2 q.p, so the box distance bound prunes by
/// similarity; candidates are compared by their exact dot product and ties
/// go to the lowest point index. Immutable after construction.
class CosineKdTree {
 public:
  CosineKdTree(RowMatrix points, std::size_t leaf_size = 16);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  const RowMatrix& points() const { return points_; }

  /// query must be unit norm or zero, with dim() entries.
  Neighbor nearest(std::span<const double> query) const;

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t left = 0;   // 0 marks a leaf (the root is never a child)
    std::size_t right = 0;
    std::vector<double> lo;
    std::vector<double> hi;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  void search(std::size_t node, const double* q, Neighbor& best, bool& found) const;
  double box_distance2(const Node& node, const double* q) const;

  RowMatrix points_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace cfs
