#pragma once

#include <cstdint>

#include "sceneflow/image.hpp"

namespace sceneflow {

struct SgmOptions {
  int max_disparity = 128;
  int p1 = 10;   // on costs scaled to 0..255
  int p2 = 120;
  double lr_tolerance = 1.0;
  /// A pixel is rejected unless every disparity more than one step away from
  /// the winner costs more than (1 + uniqueness) times the winner.
  double uniqueness = 0.05;
};

struct DisparityMap {
  Grid<float> disparity;
  Grid<std::uint8_t> valid;
};

/// 5x5 census transform, one bit per neighbor darker than the center.
Grid<std::uint32_t> census_5x5(const GrayImage& image);

/// Semi-global matching over 8 paths with winner-takes-all, uniqueness and
/// left-right checks and parabola sub-pixel refinement.  The right image
/// correspondence of left pixel x is x - d.  Pixels whose census window in
/// either view crosses the image border are invalid.
DisparityMap sgm_disparity(const GrayImage& left, const GrayImage& right,
                           const SgmOptions& options = {});

}  // namespace sceneflow
