#pragma once

#include <array>
#include <vector>

#include "sceneflow/grid.hpp"

namespace sceneflow {

using GrayImage = Grid<float>;

/// Interleaved 1- or 3-channel image with intensities normalized to [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);
  Image(int width, int height, int channels, std::vector<float> samples);

  static Image from_gray(const GrayImage& gray);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return samples_.empty(); }

  float& at(int x, int y, int c = 0) { return samples_[offset(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return samples_[offset(x, y, c)]; }
  float clamped(int x, int y, int c = 0) const;

  const std::vector<float>& samples() const noexcept { return samples_; }
  std::vector<float>& samples() noexcept { return samples_; }

  /// Luma (0.299, 0.587, 0.114) for color input, a copy for grayscale.
  GrayImage to_gray() const;

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  bool operator==(const Image&) const = default;

 private:
  std::size_t offset(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<float> samples_;
};

/// The four views of a rectified stereo sequence.
struct StereoQuad {
  Image left0;
  Image right0;
  Image left1;
  Image right1;

  /// Throws a dimension error unless all four images share width and height.
  void check_dimensions() const;
  int width() const noexcept { return left0.width(); }
  int height() const noexcept { return left0.height(); }
};

/// Mirror an image about its vertical center line.
Image mirror_horizontal(const Image& image);

template <typename T>
Grid<T> mirror_horizontal(const Grid<T>& grid) {
  Grid<T> out(grid.width(), grid.height());
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      out(x, y) = grid(grid.width() - 1 - x, y);
    }
  }
  return out;
}

}  // namespace sceneflow
