#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "sceneflow/grid.hpp"

namespace sceneflow {

/// Per-pixel 4D correspondence: optical flow (u, v) and the disparities at
/// both time steps.  Valid vectors have strictly positive disparities; the
/// invalid sentinel has NaN in every component.
struct SceneFlowVector {
  double u = 0.0;
  double v = 0.0;
  double d0 = 0.0;
  double d1 = 0.0;

  static constexpr SceneFlowVector invalid() noexcept {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, nan};
  }

  bool valid() const noexcept {
    return std::isfinite(u) && std::isfinite(v) && std::isfinite(d0) &&
           std::isfinite(d1) && d0 > 0.0 && d1 > 0.0;
  }
};

/// Affine 3D point transform x1 = A x0 + t.
struct AffineMotion {
  Eigen::Matrix3d A = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();

  static AffineMotion identity() { return {}; }
  static AffineMotion translation(const Eigen::Vector3d& t) {
    return {Eigen::Matrix3d::Identity(), t};
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return A * x + t; }
};

struct Projection {
  double x = 0.0;
  double y = 0.0;
  double disparity = 0.0;
};

/// Rectified pinhole stereo rig.  The left camera at t0 is the world frame,
/// x points right, y down, and the right camera sits at +baseline along x.
class CameraRig {
 public:
  CameraRig(double focal, double cx, double cy, double baseline);

  double focal() const noexcept { return f_; }
  double cx() const noexcept { return cx_; }
  double cy() const noexcept { return cy_; }
  double baseline() const noexcept { return baseline_; }

  /// Throws ErrorKind::kNumerical if the point has non-positive depth.
  Projection project(const Eigen::Vector3d& point) const;

  /// Throws ErrorKind::kNumerical for non-positive disparity.
  Eigen::Vector3d backproject(double x, double y, double disparity) const;

  double depth_from_disparity(double disparity) const noexcept {
    return f_ * baseline_ / disparity;
  }
  double disparity_from_depth(double depth) const noexcept {
    return f_ * baseline_ / depth;
  }

  /// Backprojects (x, y, d0), moves the point and re-projects it.  Returns
  /// the invalid sentinel when the moved point is not in front of the camera.
  SceneFlowVector sceneflow_from_motion(double x, double y, double d0,
                                        const AffineMotion& motion) const;

  bool operator==(const CameraRig&) const = default;

 private:
  double f_;
  double cx_;
  double cy_;
  double baseline_;
};

/// Dense scene flow over the reference image grid.
struct SceneFlowField {
  Grid<SceneFlowVector> vectors;
  Grid<float> cost;  // empty when no matching cost is attached

  SceneFlowField() = default;
  SceneFlowField(int width, int height)
      : vectors(width, height, SceneFlowVector::invalid()) {}

  int width() const noexcept { return vectors.width(); }
  int height() const noexcept { return vectors.height(); }
  std::size_t valid_count() const;
};

}  // namespace sceneflow
