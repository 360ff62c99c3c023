#include "sceneflow/geometry.hpp"

#include <string>

#include "sceneflow/error.hpp"

namespace sceneflow {

CameraRig::CameraRig(double focal, double cx, double cy, double baseline)
    : f_(focal), cx_(cx), cy_(cy), baseline_(baseline) {
  if (!(focal > 0.0) || !std::isfinite(focal)) {
    throw_error(ErrorKind::kInvalidArgument,
                "focal length must be positive, got " + std::to_string(focal));
  }
  if (!(baseline > 0.0) || !std::isfinite(baseline)) {
    throw_error(ErrorKind::kInvalidArgument,
                "baseline must be positive, got " + std::to_string(baseline));
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw_error(ErrorKind::kInvalidArgument, "principal point must be finite");
  }
}

Projection CameraRig::project(const Eigen::Vector3d& point) const {
  const double z = point.z();
  if (!(z > 0.0)) {
    throw_error(ErrorKind::kNumerical,
                "cannot project point with depth " + std::to_string(z));
  }
  return {f_ * point.x() / z + cx_, f_ * point.y() / z + cy_,
          f_ * baseline_ / z};
}

Eigen::Vector3d CameraRig::backproject(double x, double y,
                                       double disparity) const {
  if (!(disparity > 0.0)) {
    throw_error(ErrorKind::kNumerical,
                "invalid disparity " + std::to_string(disparity));
  }
  const double z = f_ * baseline_ / disparity;
  return {(x - cx_) * z / f_, (y - cy_) * z / f_, z};
}

SceneFlowVector CameraRig::sceneflow_from_motion(
    double x, double y, double d0, const AffineMotion& motion) const {
  if (!(d0 > 0.0)) return SceneFlowVector::invalid();
  const Eigen::Vector3d moved = motion.apply(backproject(x, y, d0));
  if (!(moved.z() > 0.0) || !moved.allFinite()) {
    return SceneFlowVector::invalid();
  }
  const Projection p = project(moved);
  return {p.x - x, p.y - y, d0, p.disparity};
}

std::size_t SceneFlowField::valid_count() const {
  std::size_t n = 0;
  for (const auto& v : vectors.data()) n += v.valid() ? 1 : 0;
  return n;
}

}  // namespace sceneflow
