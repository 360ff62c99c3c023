#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sceneflow/egomotion.hpp"

using namespace sceneflow;

namespace {

const CameraRig kRig(300.0, 127.5, 63.5, 0.5);

RigidMotion test_pose() {
  RigidMotion m;
  m.R = rotation_from_vector(Eigen::Vector3d(0.2, 1.0, -0.1).normalized() * (5.0 * M_PI / 180.0));
  m.t = Eigen::Vector3d(0.1, -0.05, 0.27).normalized() * 0.3;
  return m;
}

PoseMatch make_match(double x, double y, double depth, const RigidMotion& pose) {
  const double d0 = kRig.disparity_from_depth(depth);
  const SceneFlowVector v = kRig.sceneflow_from_motion(x, y, d0, pose.as_affine());
  return {x, y, d0, v.u, v.v};
}

struct Fixture {
  std::vector<PoseMatch> matches;
  std::vector<std::uint8_t> outlier;
};

// Outliers are displaced by 10 to 30 px so no pose explains them within 3 px.
Fixture make_matches(int n, double outlier_ratio, const RigidMotion& pose, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> px(0.0, 255.0);
  std::uniform_real_distribution<double> py(0.0, 127.0);
  std::uniform_real_distribution<double> depth(4.0, 30.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> offset(10.0, 30.0);
  Fixture f;
  const int n_out = static_cast<int>(std::round(n * outlier_ratio));
  for (int i = 0; i < n; ++i) {
    PoseMatch m = make_match(px(rng), py(rng), depth(rng), pose);
    const bool out = i < n_out;
    if (out) {
      const double a = angle(rng);
      const double r = offset(rng);
      m.u += r * std::cos(a);
      m.v += r * std::sin(a);
    }
    f.matches.push_back(m);
    f.outlier.push_back(out ? 1 : 0);
  }
  return f;
}

double rotation_error_deg(const RigidMotion& a, const RigidMotion& b) {
  return rotation_angle_deg(a.R, b.R);
}

double translation_error_rel(const RigidMotion& est, const RigidMotion& truth) {
  return (est.t - truth.t).norm() / truth.t.norm();
}

}  // namespace

TEST(Rotation, RodriguesAndAngle) {
  const Eigen::Matrix3d r = rotation_from_vector(Eigen::Vector3d(0, 0, M_PI / 2));
  EXPECT_NEAR((r * Eigen::Vector3d(1, 0, 0) - Eigen::Vector3d(0, 1, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(rotation_angle_deg(Eigen::Matrix3d::Identity(), r), 90.0, 1e-9);
  EXPECT_EQ(rotation_from_vector(Eigen::Vector3d::Zero()), Eigen::Matrix3d::Identity());
}

TEST(Reprojection, ZeroForExactMatch) {
  const RigidMotion pose = test_pose();
  const PoseMatch m = make_match(100.0, 40.0, 12.0, pose);
  EXPECT_NEAR(reprojection_error(m, pose, kRig), 0.0, 1e-9);
  PoseMatch shifted = m;
  shifted.u += 3.0;
  shifted.v -= 4.0;
  EXPECT_NEAR(reprojection_error(shifted, pose, kRig), 5.0, 1e-9);
  RigidMotion behind;
  behind.t = Eigen::Vector3d(0, 0, -100.0);
  EXPECT_TRUE(std::isinf(reprojection_error(m, behind, kRig)));
}

TEST(P3P, OneSolutionIsTheTruePose) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    RigidMotion truth;
    truth.R = rotation_from_vector(Eigen::Vector3d(u(rng), u(rng), u(rng)) * 0.05);
    truth.t = Eigen::Vector3d(u(rng), u(rng), u(rng)) * 0.2;
    std::array<Eigen::Vector3d, 3> world;
    std::array<Eigen::Vector3d, 3> bearings;
    for (int k = 0; k < 3; ++k) {
      world[k] = Eigen::Vector3d(u(rng), u(rng), 10.0 + u(rng));
      bearings[k] = truth.apply(world[k]).normalized();
    }
    const auto sols = solve_p3p(world, bearings);
    ASSERT_FALSE(sols.empty());
    ASSERT_LE(sols.size(), 4u);
    double best = 1e9;
    for (const RigidMotion& s : sols) {
      best = std::min(best, (s.R - truth.R).norm() + (s.t - truth.t).norm());
    }
    EXPECT_LT(best, 1e-6) << "trial " << trial;
  }
}

TEST(RefinePose, ConvergesFromPerturbedStart) {
  const RigidMotion truth = test_pose();
  const Fixture f = make_matches(100, 0.0, truth, 6);
  RigidMotion start = truth;
  start.R = rotation_from_vector(Eigen::Vector3d(0.01, -0.01, 0.005)) * truth.R;
  start.t += Eigen::Vector3d(0.02, 0.01, -0.03);
  const RigidMotion est = refine_pose(f.matches, start, kRig);
  EXPECT_LT(rotation_error_deg(est, truth), 1e-6);
  EXPECT_LT(translation_error_rel(est, truth), 1e-6);
}

TEST(EstimatePose, IdentityMotion) {
  const Fixture f = make_matches(150, 0.0, RigidMotion{}, 7);
  const PoseEstimate e = estimate_pose(f.matches, kRig);
  EXPECT_LT(rotation_angle_deg(e.pose.R, Eigen::Matrix3d::Identity()), 1e-6);
  EXPECT_LT(e.pose.t.norm(), 1e-6);
  for (auto v : e.inlier) EXPECT_EQ(v, 1);
}

TEST(EstimatePose, NoiselessRecovery) {
  const RigidMotion truth = test_pose();
  const Fixture f = make_matches(200, 0.0, truth, 8);
  const PoseEstimate e = estimate_pose(f.matches, kRig);
  EXPECT_LT(rotation_error_deg(e.pose, truth), 0.01);
  EXPECT_LT(translation_error_rel(e.pose, truth), 1e-3);
  EXPECT_EQ(e.stage2_inliers, 200u);
}

TEST(EstimatePose, ThirtyPercentOutliers) {
  const RigidMotion truth = test_pose();
  for (std::uint32_t seed = 1; seed <= 5; ++seed) {
    const Fixture f = make_matches(200, 0.3, truth, 100 + seed);
    PoseOptions opt;
    opt.seed = seed;
    const PoseEstimate e = estimate_pose(f.matches, kRig, opt);
    EXPECT_LT(rotation_error_deg(e.pose, truth), 0.01);
    EXPECT_LT(translation_error_rel(e.pose, truth), 1e-3);
    ASSERT_EQ(e.inlier.size(), f.matches.size());
    for (std::size_t i = 0; i < f.matches.size(); ++i) {
      EXPECT_EQ(e.inlier[i], f.outlier[i] ? 0 : 1) << i;
      EXPECT_EQ(e.inlier[i], reprojection_error(f.matches[i], e.pose, kRig) <= 3.0 ? 1 : 0);
    }
  }
}

TEST(EstimatePose, IndependentOfMatchOrder) {
  const RigidMotion truth = test_pose();
  Fixture f = make_matches(120, 0.3, truth, 9);
  const PoseEstimate a = estimate_pose(f.matches, kRig);
  std::vector<std::size_t> perm(f.matches.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), std::mt19937(3));
  std::vector<PoseMatch> shuffled;
  for (std::size_t i : perm) shuffled.push_back(f.matches[i]);
  const PoseEstimate b = estimate_pose(shuffled, kRig);
  EXPECT_EQ(a.pose.R, b.pose.R);
  EXPECT_EQ(a.pose.t, b.pose.t);
  for (std::size_t k = 0; k < perm.size(); ++k) EXPECT_EQ(b.inlier[k], a.inlier[perm[k]]);
}

TEST(EstimatePose, DepthLimitAndFailures) {
  const RigidMotion truth = test_pose();
  Fixture f = make_matches(60, 0.0, truth, 10);
  f.matches.push_back(make_match(50.0, 50.0, 80.0, truth));  // beyond 35 m
  f.matches.push_back({10.0, 10.0, -1.0, 0.0, 0.0});
  const PoseEstimate e = estimate_pose(f.matches, kRig);
  EXPECT_EQ(e.used[60], 0);
  EXPECT_EQ(e.used[61], 0);
  EXPECT_EQ(e.inlier[61], 0);
  EXPECT_EQ(e.used[0], 1);

  const std::vector<PoseMatch> few(f.matches.begin(), f.matches.begin() + 4);
  try {
    estimate_pose(few, kRig);
    FAIL() << "expected a numerical error";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kNumerical);
  }
}

TEST(SegmentMotion, KernelMeanAgainstThreshold) {
  GeodesicLabeling g;
  g.label = Grid<int>(3, 1);
  g.label(0, 0) = 0;
  g.label(1, 0) = 1;
  g.label(2, 0) = 2;
  // Seed 0 is moving but outvoted by two static neighbors at distance 0.
  g.neighbors = {{{1, 0.0}, {2, 0.0}}, {{0, 0.0}}, {{0, 10.0}}};
  const std::vector<std::uint8_t> moving = {1, 0, 0};
  const MotionMask m = segment_motion(g, moving, 2.2, 0.4);
  EXPECT_EQ(m(0, 0), 0);  // 1/3
  EXPECT_EQ(m(1, 0), 1);  // 1/2 from its moving neighbor
  EXPECT_EQ(m(2, 0), 0);  // exp(-22) / (1 + exp(-22))
}

TEST(SegmentMotion, EdgesSeparateMovingObject) {
  EdgeMap edges(30, 10, 0.0f);
  for (int y = 0; y < 10; ++y) edges.set(15, y, 1.0f);
  std::vector<PixelRef> seeds;
  std::vector<std::uint8_t> moving;
  for (int y = 1; y < 10; y += 3) {
    for (int x = 1; x < 30; x += 3) {
      if (x == 16) continue;
      seeds.push_back({x, y});
      moving.push_back(x > 15 ? 1 : 0);
    }
  }
  const MotionMask m = segment_motion(seeds, moving, edges, 6);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 30; ++x) {
      if (x == 15) continue;
      EXPECT_EQ(m(x, y), x > 15 ? 1 : 0) << x << "," << y;
    }
  }
}

TEST(ApplyEgomotion, ReplacesOnlyStaticPixels) {
  const RigidMotion pose = test_pose();
  SceneFlowField f(4, 2);
  for (auto& v : f.vectors.data()) v = {1.0, 2.0, 10.0, 11.0};
  f.vectors(3, 1) = SceneFlowVector::invalid();
  MotionMask mask(4, 2, 0);
  mask(1, 0) = 1;
  std::size_t skipped = 0;
  const SceneFlowField out = apply_egomotion(f, mask, pose, kRig, &skipped);
  EXPECT_EQ(skipped, 1u);
  EXPECT_EQ(out.vectors(1, 0).u, 1.0);
  EXPECT_EQ(out.vectors(1, 0).d1, 11.0);
  const SceneFlowVector expect = kRig.sceneflow_from_motion(2, 1, 10.0, pose.as_affine());
  EXPECT_DOUBLE_EQ(out.vectors(2, 1).u, expect.u);
  EXPECT_DOUBLE_EQ(out.vectors(2, 1).v, expect.v);
  EXPECT_DOUBLE_EQ(out.vectors(2, 1).d0, 10.0);
  EXPECT_DOUBLE_EQ(out.vectors(2, 1).d1, expect.d1);
  EXPECT_FALSE(out.vectors(3, 1).valid());
}
