#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sceneflow {

/// Pixel position attached to an indexed descriptor.
struct PixelRef {
  int x = 0;
  int y = 0;
};

/// Static kD-tree over fixed-length float descriptors.  Nodes split on the
/// dimension of largest spread at the median; a query descends to a single
/// leaf and returns all of its items.  Items equal to a split value always
/// go right, so an exact duplicate of an indexed descriptor lands in the
/// leaf holding it.
class KdTree {
 public:
  KdTree() = default;
  KdTree(int dim, std::vector<float> descriptors, std::vector<PixelRef> pixels,
         int leaf_size = 8);

  std::span<const PixelRef> query(std::span<const float> descriptor) const;

  std::size_t size() const noexcept { return pixels_.size(); }
  int dim() const noexcept { return dim_; }
  int leaf_size() const noexcept { return leaf_size_; }

 private:
  struct Node {
    int split_dim = -1;  // -1 marks a leaf
    float split_value = 0.0f;
    int left = -1;
    int right = -1;
    int begin = 0;  // leaf item range into order_
    int end = 0;
  };

  int build(int begin, int end);
  const float* desc(int item) const { return descriptors_.data() + static_cast<std::size_t>(item) * dim_; }

  int dim_ = 0;
  int leaf_size_ = 8;
  std::vector<float> descriptors_;
  std::vector<PixelRef> pixels_;
  std::vector<int> order_;
  std::vector<PixelRef> leaf_pixels_;  // pixels_ permuted into leaf order
  std::vector<Node> nodes_;
};

/// One kD-tree per image row; a query only ever returns items on the
/// requested row, which encodes the epipolar constraint of rectified stereo.
class RowKdTrees {
 public:
  RowKdTrees() = default;
  /// `rows[r]` holds the descriptors/pixels of row r.
  RowKdTrees(int dim, std::vector<std::vector<float>> row_descriptors,
             std::vector<std::vector<PixelRef>> row_pixels, int leaf_size = 8);

  /// Empty span for rows outside the indexed range.
  std::span<const PixelRef> query(std::span<const float> descriptor, int row) const;
  int rows() const noexcept { return static_cast<int>(trees_.size()); }

 private:
  std::vector<KdTree> trees_;
};

}  // namespace sceneflow
