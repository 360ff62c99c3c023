#include "sceneflow/kdtree.hpp"

#include <algorithm>
#include <numeric>

#include "sceneflow/error.hpp"

namespace sceneflow {

KdTree::KdTree(int dim, std::vector<float> descriptors,
               std::vector<PixelRef> pixels, int leaf_size)
    : dim_(dim),
      leaf_size_(leaf_size),
      descriptors_(std::move(descriptors)),
      pixels_(std::move(pixels)) {
  if (dim <= 0 || leaf_size <= 0) {
    throw_error(ErrorKind::kInvalidArgument, "kD-tree needs positive dim and leaf size");
  }
  if (descriptors_.size() != pixels_.size() * static_cast<std::size_t>(dim)) {
    throw_error(ErrorKind::kDimension, "kD-tree descriptor/pixel count mismatch");
  }
  order_.resize(pixels_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!pixels_.empty()) build(0, static_cast<int>(order_.size()));
  leaf_pixels_.reserve(order_.size());
  for (int i : order_) leaf_pixels_.push_back(pixels_[i]);
}

int KdTree::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= leaf_size_) return id;

  int best_dim = -1;
  float best_spread = 0.0f;
  for (int d = 0; d < dim_; ++d) {
    float lo = desc(order_[begin])[d];
    float hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      const float v = desc(order_[i])[d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = d;
    }
  }
  if (best_dim < 0) return id;  // all descriptors identical

  auto first = order_.begin() + begin;
  auto last = order_.begin() + end;
  auto key = [&](int item) { return desc(item)[best_dim]; };
  std::sort(first, last, [&](int a, int b) {
    return key(a) != key(b) ? key(a) < key(b) : a < b;
  });
  const int mid = begin + (end - begin) / 2;
  float split = key(order_[mid]);
  if (split == key(order_[begin])) {
    // Median equals the minimum; split just above it instead.
    auto it = std::find_if(first, last, [&](int item) { return key(item) > split; });
    split = key(*it);
  }
  const int cut = static_cast<int>(
      std::find_if(first, last, [&](int item) { return key(item) >= split; }) -
      order_.begin());

  const int left = build(begin, cut);
  const int right = build(cut, end);
  Node& node = nodes_[id];
  node.split_dim = best_dim;
  node.split_value = split;
  node.left = left;
  node.right = right;
  return id;
}

std::span<const PixelRef> KdTree::query(std::span<const float> descriptor) const {
  if (nodes_.empty()) return {};
  int n = 0;
  while (nodes_[n].split_dim >= 0) {
    const Node& node = nodes_[n];
    n = descriptor[node.split_dim] < node.split_value ? node.left : node.right;
  }
  return std::span<const PixelRef>(leaf_pixels_).subspan(
      nodes_[n].begin, nodes_[n].end - nodes_[n].begin);
}

RowKdTrees::RowKdTrees(int dim, std::vector<std::vector<float>> row_descriptors,
                       std::vector<std::vector<PixelRef>> row_pixels,
                       int leaf_size) {
  if (row_descriptors.size() != row_pixels.size()) {
    throw_error(ErrorKind::kDimension, "row tree descriptor/pixel row mismatch");
  }
  trees_.reserve(row_pixels.size());
  for (std::size_t r = 0; r < row_pixels.size(); ++r) {
    trees_.emplace_back(dim, std::move(row_descriptors[r]), std::move(row_pixels[r]),
                        leaf_size);
  }
}

std::span<const PixelRef> RowKdTrees::query(std::span<const float> descriptor,
                                            int row) const {
  if (row < 0 || row >= rows()) return {};
  return trees_[row].query(descriptor);
}

}  // namespace sceneflow
