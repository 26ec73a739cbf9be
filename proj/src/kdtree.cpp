#include "cfs/kdtree.hpp"

#include <algorithm>
#include <cmath>

#include "cfs/error.hpp"

namespace cfs {

namespace {
// Absorbs rounding in the distance/similarity identity so that pruning never
// discards a node that could hold an equal or better candidate.
constexpr double kPruneSlack = 1e-9;
}  // namespace

RowMatrix normalize_rows(const Eigen::MatrixXd& x) {
  RowMatrix out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0) out.row(i) /= norm;
  }
  return out;
}

CosineKdTree::CosineKdTree(RowMatrix points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  if (points_.rows() == 0) throw Error(ErrorKind::kDegenerate, "kd-tree: no points");
  order_.resize(size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * size() / leaf_size_ + 2);
  build(0, size());
}

std::size_t CosineKdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.emplace_back();
  const std::size_t d = dim();
  std::vector<double> lo(d, INFINITY), hi(d, -INFINITY);
  for (std::size_t i = begin; i < end; ++i) {
    const double* p = points_.row(static_cast<Eigen::Index>(order_[i])).data();
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], p[j]);
      hi[j] = std::max(hi[j], p[j]);
    }
  }
  std::size_t split_dim = 0;
  double spread = -1.0;
  for (std::size_t j = 0; j < d; ++j) {
    if (hi[j] - lo[j] > spread) {
      spread = hi[j] - lo[j];
      split_dim = j;
    }
  }
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  nodes_[id].lo = std::move(lo);
  nodes_[id].hi = std::move(hi);
  if (end - begin <= leaf_size_ || spread <= 0.0) return id;

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     return points_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(split_dim)) <
                            points_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(split_dim));
                   });
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double CosineKdTree::box_distance2(const Node& node, const double* q) const {
  double s = 0.0;
  for (std::size_t j = 0; j < node.lo.size(); ++j) {
    double diff = 0.0;
    if (q[j] < node.lo[j]) diff = node.lo[j] - q[j];
    else if (q[j] > node.hi[j]) diff = q[j] - node.hi[j];
    s += diff * diff;
  }
  return s;
}

void CosineKdTree::search(std::size_t id, const double* q, Neighbor& best, bool& found) const {
  const Node& node = nodes_[id];
  if (found) {
    const double bound = 1.0 - 0.5 * box_distance2(node, q);
    if (bound < best.similarity - kPruneSlack) return;
  }
  if (node.left == 0) {
    const std::size_t d = dim();
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      const double sim = unit_dot(q, points_.row(static_cast<Eigen::Index>(idx)).data(), d);
      if (!found || sim > best.similarity || (sim == best.similarity && idx < best.index)) {
        best = {idx, sim};
        found = true;
      }
    }
    return;
  }
  const double dl = box_distance2(nodes_[node.left], q);
  const double dr = box_distance2(nodes_[node.right], q);
  if (dl <= dr) {
    search(node.left, q, best, found);
    search(node.right, q, best, found);
  } else {
    search(node.right, q, best, found);
    search(node.left, q, best, found);
  }
}

Neighbor CosineKdTree::nearest(std::span<const double> query) const {
  if (query.size() != dim()) throw Error(ErrorKind::kDimension, "kd-tree: query dimension mismatch");
  Neighbor best;
  bool found = false;
  search(0, query.data(), best, found);
  return best;
}

}  // namespace cfs
