#include "sceneflow/wls.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/QR>

#include "sceneflow/error.hpp"

namespace sceneflow {
namespace {

// Relative pivot threshold below which the centered design counts as
// rank deficient.
constexpr double kRankThreshold = 1e-9;

Eigen::VectorXd normalized_weights(std::size_t n, std::span<const double> weights) {
  if (n == 0) throw_error(ErrorKind::kInvalidArgument, "weighted fit needs at least one sample");
  if (weights.size() != n) {
    throw_error(ErrorKind::kDimension, "weighted fit: weight count differs from sample count");
  }
  double max_w = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) {
      throw_error(ErrorKind::kInvalidArgument, "weights must be finite and non-negative");
    }
    max_w = std::max(max_w, w);
  }
  if (max_w == 0.0) throw_error(ErrorKind::kNumerical, "all fit weights are zero");
  Eigen::VectorXd w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = weights[i] / max_w;
  return w;
}

}  // namespace

PlaneFit fit_plane(std::span<const PlaneSample> samples, std::span<const double> weights) {
  const std::size_t n = samples.size();
  const Eigen::VectorXd w = normalized_weights(n, weights);
  const double wsum = w.sum();
  double mx = 0.0, my = 0.0, md = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += w[i] * samples[i].x;
    my += w[i] * samples[i].y;
    md += w[i] * samples[i].d0;
  }
  mx /= wsum;
  my /= wsum;
  md /= wsum;

  PlaneFit fit;
  fit.model = {0.0, 0.0, md};
  fit.fallback = true;
  if (n < 3) return fit;

  Eigen::MatrixXd M(n, 2);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::sqrt(w[i]);
    M(i, 0) = s * (samples[i].x - mx);
    M(i, 1) = s * (samples[i].y - my);
    b[i] = s * (samples[i].d0 - md);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < 2) return fit;
  const Eigen::Vector2d a = qr.solve(b);
  if (!a.allFinite()) return fit;
  fit.model = {a[0], a[1], md - a[0] * mx - a[1] * my};
  fit.fallback = false;
  return fit;
}

AffineFit fit_affine(std::span<const MotionSample> samples, std::span<const double> weights) {
  const std::size_t n = samples.size();
  const Eigen::VectorXd w = normalized_weights(n, weights);
  const double wsum = w.sum();
  Eigen::Vector3d m0 = Eigen::Vector3d::Zero();
  Eigen::Vector3d m1 = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    m0 += w[i] * samples[i].x0;
    m1 += w[i] * samples[i].x1;
  }
  m0 /= wsum;
  m1 /= wsum;

  AffineFit fit;
  fit.motion = AffineMotion::translation(m1 - m0);
  fit.fallback = true;
  if (n < 4) return fit;

  Eigen::MatrixXd M(n, 3);
  Eigen::MatrixXd B(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::sqrt(w[i]);
    M.row(i) = s * (samples[i].x0 - m0).transpose();
    B.row(i) = s * (samples[i].x1 - m1).transpose();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < 3) return fit;
  const Eigen::Matrix3d At = qr.solve(B);
  if (!At.allFinite()) return fit;
  fit.motion.A = At.transpose();
  fit.motion.t = m1 - fit.motion.A * m0;
  fit.fallback = false;
  return fit;
}

}  // namespace sceneflow
