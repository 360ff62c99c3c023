#pragma once

#include <cmath>
#include <span>

#include <Eigen/Core>

#include "sceneflow/geometry.hpp"

namespace sceneflow {

/// Disparity plane d0 = a1 x + a2 y + a3.
struct PlaneModel {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double evaluate(double x, double y) const noexcept { return a1 * x + a2 * y + a3; }
};

struct PlaneSample {
  double x = 0.0;
  double y = 0.0;
  double d0 = 0.0;
};

struct PlaneFit {
  PlaneModel model;
  bool fallback = false;  // fronto-parallel plane at the weighted mean d0
};

struct MotionSample {
  Eigen::Vector3d x0;
  Eigen::Vector3d x1;
};

struct AffineFit {
  AffineMotion motion;
  bool fallback = false;  // translation-only fit
};

/// Kernel weight exp(-alpha * distance).
inline double kernel_weight(double distance, double alpha) {
  return std::exp(-alpha * distance);
}

/// Weighted least squares plane through the samples.  Fewer than three
/// samples or collinear (x, y) fall back to a fronto-parallel plane.
/// Weights must be finite, non-negative and not all zero; only their ratios
/// matter.
PlaneFit fit_plane(std::span<const PlaneSample> samples, std::span<const double> weights);

/// Weighted least squares affine map x1 = A x0 + t over twelve unknowns.
/// Fewer than four samples or coplanar x0 fall back to A = I and the
/// weighted mean translation.
AffineFit fit_affine(std::span<const MotionSample> samples, std::span<const double> weights);

}  // namespace sceneflow
