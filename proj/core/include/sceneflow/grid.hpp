#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sceneflow/error.hpp"

namespace sceneflow {

/// Dense row-major 2D array of values.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw_error(ErrorKind::kInvalidArgument, "negative grid size");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  /// Replicate-padded read.
  const T& clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
    y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
    return data_[index(x, y)];
  }

  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

template <typename A, typename B>
void require_same_size(const Grid<A>& a, const Grid<B>& b, const std::string& what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw_error(ErrorKind::kDimension,
                what + ": expected " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + ", found " +
                    std::to_string(b.width()) + "x" + std::to_string(b.height()));
  }
}

}  // namespace sceneflow
