#include "sceneflow/egomotion.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <tuple>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "sceneflow/error.hpp"
#include "sceneflow/interpolator.hpp"

namespace sceneflow {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

// Real roots of c[0] x^n + ... + c[n], leading near-zero coefficients dropped.
std::vector<double> real_roots(std::vector<double> c) {
  const double scale = std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2]),
                                 std::abs(c.size() > 3 ? c[3] : 0.0),
                                 std::abs(c.size() > 4 ? c[4] : 0.0)});
  while (c.size() > 1 && std::abs(c.front()) <= 1e-14 * scale) c.erase(c.begin());
  const int n = static_cast<int>(c.size()) - 1;
  std::vector<double> roots;
  if (n < 1) return roots;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) companion(0, i) = -c[i + 1] / c[0];
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  auto poly = [&](double x, double* deriv) {
    double p = 0.0, d = 0.0;
    for (int i = 0; i <= n; ++i) {
      d = d * x + p;
      p = p * x + c[i];
    }
    *deriv = d;
    return p;
  };
  for (int i = 0; i < n; ++i) {
    const std::complex<double> z = solver.eigenvalues()[i];
    if (std::abs(z.imag()) > 1e-6 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 3; ++it) {  // Newton polish
      double d;
      const double p = poly(x, &d);
      if (d == 0.0) break;
      x -= p / d;
    }
    roots.push_back(x);
  }
  return roots;
}

// R, t with cam_i = R world_i + t in the least squares sense.
RigidMotion absolute_orientation(const std::array<Eigen::Vector3d, 3>& world,
                                 const std::array<Eigen::Vector3d, 3>& cam) {
  Eigen::Vector3d pw = (world[0] + world[1] + world[2]) / 3.0;
  Eigen::Vector3d pc = (cam[0] + cam[1] + cam[2]) / 3.0;
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i) H += (world[i] - pw) * (cam[i] - pc).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  D(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
  RigidMotion m;
  m.R = svd.matrixV() * D * svd.matrixU().transpose();
  m.t = pc - m.R * pw;
  return m;
}

Eigen::Vector3d bearing(double px, double py, const CameraRig& rig) {
  return Eigen::Vector3d((px - rig.cx()) / rig.focal(), (py - rig.cy()) / rig.focal(), 1.0).normalized();
}

double pose_cost(std::span<const PoseMatch> matches, const std::vector<Eigen::Vector3d>& points,
                 const RigidMotion& pose, const CameraRig& rig) {
  double cost = 0.0;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const Eigen::Vector3d q = pose.apply(points[i]);
    if (q.z() <= 1e-9) {
      cost += 1e12;
      continue;
    }
    const double ex = rig.focal() * q.x() / q.z() + rig.cx() - (matches[i].x + matches[i].u);
    const double ey = rig.focal() * q.y() / q.z() + rig.cy() - (matches[i].y + matches[i].v);
    cost += ex * ex + ey * ey;
  }
  return cost;
}

bool usable(const PoseMatch& m, const CameraRig& rig, double max_depth) {
  if (!std::isfinite(m.x) || !std::isfinite(m.y) || !std::isfinite(m.u) ||
      !std::isfinite(m.v) || !std::isfinite(m.d0) || !(m.d0 > 0.0)) {
    return false;
  }
  return rig.depth_from_disparity(m.d0) <= max_depth;
}

}  // namespace

double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d r = a.transpose() * b;
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos loses precision near zero; use the skew part as well.
  const Eigen::Vector3d s(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return std::atan2(0.5 * s.norm(), c) * 180.0 / std::numbers::pi;
}

Eigen::Matrix3d rotation_from_vector(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

double reprojection_error(const PoseMatch& match, const RigidMotion& pose, const CameraRig& rig) {
  if (!(match.d0 > 0.0)) return kInf;
  const Eigen::Vector3d q = pose.apply(rig.backproject(match.x, match.y, match.d0));
  if (!(q.z() > 0.0)) return kInf;
  const double ex = rig.focal() * q.x() / q.z() + rig.cx() - (match.x + match.u);
  const double ey = rig.focal() * q.y() / q.z() + rig.cy() - (match.y + match.v);
  return std::hypot(ex, ey);
}

std::vector<RigidMotion> solve_p3p(const std::array<Eigen::Vector3d, 3>& world,
                                   const std::array<Eigen::Vector3d, 3>& bearings) {
  std::vector<RigidMotion> out;
  const double a = (world[1] - world[2]).norm();
  const double b = (world[0] - world[2]).norm();
  const double c = (world[0] - world[1]).norm();
  if (a < 1e-12 || b < 1e-12 || c < 1e-12) return out;
  const double ca = bearings[1].dot(bearings[2]);
  const double cb = bearings[0].dot(bearings[2]);
  const double cg = bearings[0].dot(bearings[1]);
  const double b2 = b * b;
  const double amc = (a * a - c * c) / b2;
  const double apc = (a * a + c * c) / b2;

  const double A4 = (amc - 1.0) * (amc - 1.0) - 4.0 * c * c / b2 * ca * ca;
  const double A3 = 4.0 * (amc * (1.0 - amc) * cb - (1.0 - apc) * ca * cg + 2.0 * c * c / b2 * ca * ca * cb);
  const double A2 = 2.0 * (amc * amc - 1.0 + 2.0 * amc * amc * cb * cb + 2.0 * (b2 - c * c) / b2 * ca * ca -
                           4.0 * apc * ca * cb * cg + 2.0 * (b2 - a * a) / b2 * cg * cg);
  const double A1 = 4.0 * (-amc * (1.0 + amc) * cb + 2.0 * a * a / b2 * cg * cg * cb - (1.0 - apc) * ca * cg);
  const double A0 = (1.0 + amc) * (1.0 + amc) - 4.0 * a * a / b2 * cg * cg;

  for (double v : real_roots({A4, A3, A2, A1, A0})) {
    const double denom = 2.0 * (cg - v * ca);
    if (std::abs(denom) < 1e-14) continue;
    const double u = ((-1.0 + amc) * v * v - 2.0 * amc * cb * v + 1.0 + amc) / denom;
    const double s1sq = b2 / (1.0 + v * v - 2.0 * v * cb);
    if (!(s1sq > 0.0) || !std::isfinite(u)) continue;
    const double s1 = std::sqrt(s1sq);
    const double s2 = u * s1;
    const double s3 = v * s1;
    if (!(s2 > 0.0) || !(s3 > 0.0)) continue;
    const std::array<Eigen::Vector3d, 3> cam = {s1 * bearings[0], s2 * bearings[1], s3 * bearings[2]};
    const RigidMotion m = absolute_orientation(world, cam);
    if (m.R.allFinite() && m.t.allFinite()) out.push_back(m);
  }
  return out;
}

RigidMotion refine_pose(std::span<const PoseMatch> matches, const RigidMotion& initial,
                        const CameraRig& rig, int max_iterations) {
  std::vector<Eigen::Vector3d> points(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    points[i] = rig.backproject(matches[i].x, matches[i].y, matches[i].d0);
  }
  RigidMotion pose = initial;
  double cost = pose_cost(matches, points, pose, rig);
  double mu = 1e-3;
  const double f = rig.focal();
  for (int it = 0; it < max_iterations && cost > 0.0; ++it) {
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (std::size_t i = 0; i < matches.size(); ++i) {
      const Eigen::Vector3d rx = pose.R * points[i];
      const Eigen::Vector3d q = rx + pose.t;
      if (q.z() <= 1e-9) continue;
      const double iz = 1.0 / q.z();
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << f * iz, 0.0, -f * q.x() * iz * iz, 0.0, f * iz, -f * q.y() * iz * iz;
      Eigen::Matrix<double, 3, 6> dq;
      dq.leftCols<3>() = -skew(rx);
      dq.rightCols<3>() = Eigen::Matrix3d::Identity();
      const Eigen::Matrix<double, 2, 6> J = dproj * dq;
      const Eigen::Vector2d r(f * q.x() * iz + rig.cx() - (matches[i].x + matches[i].u),
                              f * q.y() * iz + rig.cy() - (matches[i].y + matches[i].v));
      H += J.transpose() * J;
      g += J.transpose() * r;
    }
    bool improved = false;
    while (mu < 1e16) {
      Eigen::Matrix<double, 6, 6> A = H;
      for (int k = 0; k < 6; ++k) A(k, k) += mu * std::max(H(k, k), 1e-12);
      const Eigen::Matrix<double, 6, 1> delta = A.ldlt().solve(-g);
      if (!delta.allFinite()) {
        mu *= 10.0;
        continue;
      }
      RigidMotion candidate;
      candidate.R = rotation_from_vector(delta.head<3>()) * pose.R;
      candidate.t = pose.t + delta.tail<3>();
      const double c = pose_cost(matches, points, candidate, rig);
      if (c < cost) {
        const bool converged = delta.norm() < 1e-15 || cost - c <= 1e-18 * cost;
        pose = candidate;
        cost = c;
        mu = std::max(mu / 10.0, 1e-12);
        improved = !converged;
        break;
      }
      mu *= 10.0;
    }
    if (!improved) break;
  }
  // Re-orthonormalize against accumulated rounding.
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(pose.R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  pose.R = svd.matrixU() * svd.matrixV().transpose();
  return pose;
}

PoseEstimate estimate_pose(std::span<const PoseMatch> matches, const CameraRig& rig,
                           const PoseOptions& options) {
  if (options.ransac_iterations < 1 || !(options.confidence > 0.0 && options.confidence < 1.0) ||
      !(options.inlier_threshold > 0.0) || !(options.refine_threshold > 0.0) || options.min_matches < 4) {
    throw_error(ErrorKind::kInvalidArgument, "pose estimation: invalid options");
  }
  PoseEstimate out;
  out.used.assign(matches.size(), 0);
  out.inlier.assign(matches.size(), 0);

  // Canonical order makes the estimate independent of the input order.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    if (usable(matches[i], rig, options.max_depth)) {
      order.push_back(i);
      out.used[i] = 1;
    }
  }
  auto key = [&](std::size_t i) {
    const PoseMatch& m = matches[i];
    return std::make_tuple(m.y, m.x, m.d0, m.u, m.v);
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  const std::size_t n = order.size();
  if (n < static_cast<std::size_t>(options.min_matches)) {
    throw_error(ErrorKind::kNumerical, "pose estimation: only " + std::to_string(n) +
                                           " matches within the depth limit");
  }
  std::vector<PoseMatch> eligible(n);
  std::vector<Eigen::Vector3d> world(n);
  std::vector<Eigen::Vector3d> bearings(n);
  for (std::size_t k = 0; k < n; ++k) {
    eligible[k] = matches[order[k]];
    world[k] = rig.backproject(eligible[k].x, eligible[k].y, eligible[k].d0);
    bearings[k] = bearing(eligible[k].x + eligible[k].u, eligible[k].y + eligible[k].v, rig);
  }
  auto count_inliers = [&](const RigidMotion& pose, double threshold) {
    std::size_t count = 0;
    for (const PoseMatch& m : eligible) count += reprojection_error(m, pose, rig) <= threshold;
    return count;
  };

  std::mt19937_64 rng(options.seed);
  RigidMotion best;
  std::size_t best_count = 0;
  double needed = options.ransac_iterations;
  int it = 0;
  for (; it < options.ransac_iterations && it < needed; ++it) {
    std::array<std::size_t, 4> sample{};
    for (int s = 0; s < 4; ++s) {
      bool fresh = false;
      while (!fresh) {
        sample[s] = static_cast<std::size_t>(rng() % n);
        fresh = std::find(sample.begin(), sample.begin() + s, sample[s]) == sample.begin() + s;
      }
    }
    const auto hyps = solve_p3p({world[sample[0]], world[sample[1]], world[sample[2]]},
                                {bearings[sample[0]], bearings[sample[1]], bearings[sample[2]]});
    const RigidMotion* chosen = nullptr;
    double chosen_err = kInf;
    for (const RigidMotion& h : hyps) {
      const double e = reprojection_error(eligible[sample[3]], h, rig);
      if (e < chosen_err) {
        chosen_err = e;
        chosen = &h;
      }
    }
    if (!chosen) continue;
    const std::size_t count = count_inliers(*chosen, options.inlier_threshold);
    if (count > best_count) {
      best_count = count;
      best = *chosen;
      const double w4 = std::pow(static_cast<double>(count) / n, 4.0);
      needed = w4 >= 1.0 ? 0.0 : std::log(1.0 - options.confidence) / std::log(1.0 - w4);
    }
  }
  out.ransac_iterations = it;
  if (best_count < static_cast<std::size_t>(options.min_matches)) {
    throw_error(ErrorKind::kNumerical, "pose estimation: RANSAC found only " +
                                           std::to_string(best_count) + " inliers");
  }

  auto collect = [&](const RigidMotion& pose, double threshold) {
    std::vector<PoseMatch> in;
    for (const PoseMatch& m : eligible) {
      if (reprojection_error(m, pose, rig) <= threshold) in.push_back(m);
    }
    return in;
  };
  std::vector<PoseMatch> stage1 = collect(best, options.inlier_threshold);
  out.stage1_inliers = stage1.size();
  const RigidMotion pose1 = refine_pose(stage1, best, rig);
  std::vector<PoseMatch> stage2 = collect(pose1, options.refine_threshold);
  if (stage2.size() < static_cast<std::size_t>(options.min_matches)) {
    throw_error(ErrorKind::kNumerical, "pose estimation: too few inliers after refinement");
  }
  out.pose = refine_pose(stage2, pose1, rig);
  for (std::size_t i = 0; i < matches.size(); ++i) {
    out.inlier[i] = reprojection_error(matches[i], out.pose, rig) <= options.refine_threshold ? 1 : 0;
    out.stage2_inliers += out.used[i] && out.inlier[i];
  }
  return out;
}

MotionMask segment_motion(const GeodesicLabeling& labeling,
                          std::span<const std::uint8_t> seed_moving, double alpha, double tau) {
  std::vector<double> values(seed_moving.begin(), seed_moving.end());
  const std::vector<double> smoothed = nadaraya_watson(labeling, values, alpha);
  MotionMask mask(labeling.label.width(), labeling.label.height());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = smoothed[labeling.label[i]] > tau ? 1 : 0;
  }
  return mask;
}

MotionMask segment_motion(std::span<const PixelRef> seeds,
                          std::span<const std::uint8_t> seed_moving, const EdgeMap& edges,
                          int n_neighbors, double alpha, double tau, double nu) {
  if (seeds.size() != seed_moving.size()) {
    throw_error(ErrorKind::kDimension, "segment_motion: one label per seed required");
  }
  return segment_motion(geodesic_labeling(seeds, edges, n_neighbors, nu), seed_moving, alpha, tau);
}

SceneFlowField apply_egomotion(const SceneFlowField& field, const MotionMask& mask,
                               const RigidMotion& pose, const CameraRig& rig,
                               std::size_t* skipped) {
  require_same_size(field.vectors, mask, "apply_egomotion: motion mask");
  SceneFlowField out = field;
  std::size_t skip = 0;
  const AffineMotion motion = pose.as_affine();
  for (int y = 0; y < field.height(); ++y) {
    for (int x = 0; x < field.width(); ++x) {
      if (mask(x, y)) continue;
      const double d0 = field.vectors(x, y).d0;
      if (!(d0 > 0.0) || !std::isfinite(d0)) {
        ++skip;
        continue;
      }
      const SceneFlowVector v = rig.sceneflow_from_motion(x, y, d0, motion);
      if (!v.valid()) {
        ++skip;
        continue;
      }
      out.vectors(x, y) = v;
    }
  }
  if (skipped) *skipped = skip;
  return out;
}

}  // namespace sceneflow
