#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "sceneflow/geometry.hpp"
#include "sceneflow/grid.hpp"

namespace sceneflow {

/// KITTI rule: an error is an outlier iff it exceeds 3 px and 5% of the
/// ground truth magnitude.
inline bool kitti_outlier(double error, double gt_magnitude) {
  return error > 3.0 && error > 0.05 * gt_magnitude;
}

struct OutlierRates {
  double d1 = 0.0;
  double d2 = 0.0;
  double fl = 0.0;
  double sf = 0.0;
  std::size_t pixels = 0;
};

struct KittiReport {
  OutlierRates all;
  std::optional<OutlierRates> background;
  std::optional<OutlierRates> foreground;
};

struct OutlierMasks {
  Grid<std::uint8_t> evaluated;
  Grid<std::uint8_t> d1;
  Grid<std::uint8_t> d2;
  Grid<std::uint8_t> fl;
  Grid<std::uint8_t> sf;
};

/// Per-pixel outlier flags over pixels where `valid` is set and the ground
/// truth vector is valid.  Invalid estimates count as outliers everywhere.
OutlierMasks outlier_masks(const SceneFlowField& estimate, const SceneFlowField& truth,
                           const Grid<std::uint8_t>& valid);

/// Outlier rates (fractions) over evaluated pixels; with a foreground mask
/// also split into background and foreground (absent when empty).  Throws
/// kInvalidArgument when no pixel is evaluated.
KittiReport kitti_outlier_rate(const SceneFlowField& estimate, const SceneFlowField& truth,
                               const Grid<std::uint8_t>& valid,
                               const Grid<std::uint8_t>* foreground = nullptr);

/// Undefined ratios (zero denominators) are empty.
struct PrecisionRecall {
  std::optional<double> precision;
  std::optional<double> recall;
};

PrecisionRecall precision_recall(const Grid<std::uint8_t>& estimate_moving,
                                 const Grid<std::uint8_t>& truth_moving);

}  // namespace sceneflow
