#pragma once

#include <vector>

#include "sceneflow/image.hpp"

namespace sceneflow {

/// Smoothed copies of the four input views, one level per subsampling factor
/// 1, 2, ..., 2^k.  Every level keeps the full-resolution pixel grid; coarser
/// scales are simulated by sampling with a stride equal to the factor.
struct ScalePyramid {
  struct Level {
    int factor = 1;
    StereoQuad images;
  };
  std::vector<Level> levels;

  int subscales() const noexcept { return static_cast<int>(levels.size()) - 1; }
  const Level& coarsest() const { return levels.back(); }
};

/// Area-averaging downsample by an integer factor; partial border blocks
/// average only the pixels they cover.
Image area_downsample(const Image& image, int factor);

/// Separable Lanczos (a = 3) resampling to the requested size, with
/// replicate padding.
Image lanczos_resize(const Image& image, int width, int height);

/// Area downsample by `factor`, then Lanczos upsample back to full size.
Image smooth_for_scale(const Image& image, int factor);

ScalePyramid build_scale_pyramid(const StereoQuad& images, int subscales);

}  // namespace sceneflow
