#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sceneflow/edges.hpp"
#include "sceneflow/geodesic.hpp"
#include "sceneflow/geometry.hpp"

namespace sceneflow {

/// Rigid transform taking points in the left camera frame at t0 into the
/// left camera frame at t1: x1 = R x0 + t.
struct RigidMotion {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return R * x + t; }
  AffineMotion as_affine() const { return {R, t}; }
};

/// Rotation angle of R_a^T R_b in degrees.
double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

/// Rodrigues rotation for an axis-angle vector.
Eigen::Matrix3d rotation_from_vector(const Eigen::Vector3d& w);

/// One scene flow match used for pose estimation.
struct PoseMatch {
  double x = 0.0;
  double y = 0.0;
  double d0 = 0.0;
  double u = 0.0;
  double v = 0.0;
};

struct PoseOptions {
  int ransac_iterations = 500;
  double confidence = 0.99;
  double inlier_threshold = 1.0;   // px, RANSAC and first estimate
  double refine_threshold = 3.0;   // px, second estimate and final flags
  double max_depth = 35.0;         // m
  int min_matches = 6;
  std::uint64_t seed = 0;
};

struct PoseEstimate {
  RigidMotion pose;
  std::vector<std::uint8_t> inlier;  // per input match, under the final pose
  std::vector<std::uint8_t> used;    // finite, positive disparity within max_depth
  int ransac_iterations = 0;
  std::size_t stage1_inliers = 0;
  std::size_t stage2_inliers = 0;
};

/// Re-projection error in pixels of a match under a pose; +inf when the
/// moved point is not in front of the camera.
double reprojection_error(const PoseMatch& match, const RigidMotion& pose, const CameraRig& rig);

/// Minimal solutions (up to four) for the pose mapping three world points to
/// three unit bearing vectors in the camera frame.
std::vector<RigidMotion> solve_p3p(const std::array<Eigen::Vector3d, 3>& world,
                                   const std::array<Eigen::Vector3d, 3>& bearings);

/// Levenberg-Marquardt minimization of the summed squared re-projection
/// error over the given matches.
RigidMotion refine_pose(std::span<const PoseMatch> matches, const RigidMotion& initial,
                        const CameraRig& rig, int max_iterations = 50);

/// RANSAC over P3P hypotheses on 4-point samples, LM on the 1 px inliers,
/// then re-collection at 3 px and a second LM estimate.  The result does not
/// depend on the order of `matches`.  Throws kNumerical when too few matches
/// are usable or no hypothesis reaches `min_matches` inliers.
PoseEstimate estimate_pose(std::span<const PoseMatch> matches, const CameraRig& rig,
                           const PoseOptions& options = {});

/// 1 = moving, 0 = static.
using MotionMask = Grid<std::uint8_t>;

/// Kernel-weighted mean of per-seed labels over each seed's neighborhood,
/// thresholded: a pixel is moving iff the value of its closest seed's cell
/// exceeds tau.
MotionMask segment_motion(const GeodesicLabeling& labeling,
                          std::span<const std::uint8_t> seed_moving, double alpha = 2.2,
                          double tau = 0.4);
MotionMask segment_motion(std::span<const PixelRef> seeds,
                          std::span<const std::uint8_t> seed_moving, const EdgeMap& edges,
                          int n_neighbors = 80, double alpha = 2.2, double tau = 0.4,
                          double nu = 0.001);

/// Replaces (u, v, d1) at static pixels by the flow induced by `pose`.
/// Pixels without a valid d0, or whose moved point leaves the front of the
/// camera, are left unchanged and counted in `skipped`.
SceneFlowField apply_egomotion(const SceneFlowField& field, const MotionMask& mask,
                               const RigidMotion& pose, const CameraRig& rig,
                               std::size_t* skipped = nullptr);

}  // namespace sceneflow
