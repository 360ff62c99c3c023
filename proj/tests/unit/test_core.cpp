#include <gtest/gtest.h>

#include <random>

#include "sceneflow/geometry.hpp"
#include "sceneflow/image.hpp"
#include "sceneflow/pyramid.hpp"

using namespace sceneflow;

namespace {

Image random_image(int w, int h, int channels, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(w, h, channels);
  for (float& s : img.samples()) s = u(rng);
  return img;
}

StereoQuad random_quad(int w, int h, std::uint32_t seed) {
  return {random_image(w, h, 1, seed), random_image(w, h, 1, seed + 1),
          random_image(w, h, 1, seed + 2), random_image(w, h, 1, seed + 3)};
}

}  // namespace

TEST(CameraRig, ProjectExample) {
  const CameraRig rig(100.0, 0.0, 0.0, 0.5);
  const Projection p = rig.project({0.0, 0.0, 2.0});
  EXPECT_DOUBLE_EQ(p.x, 0.0);
  EXPECT_DOUBLE_EQ(p.y, 0.0);
  EXPECT_DOUBLE_EQ(p.disparity, 25.0);
}

TEST(CameraRig, OpticalAxisProjectsToPrincipalPoint) {
  const CameraRig rig(100.0, 0.0, 0.0, 0.5);
  for (double z : {0.1, 1.0, 7.5, 1000.0}) {
    const Projection p = rig.project({0.0, 0.0, z});
    EXPECT_DOUBLE_EQ(p.x, 0.0);
    EXPECT_DOUBLE_EQ(p.y, 0.0);
  }
}

TEST(CameraRig, BackprojectExample) {
  const CameraRig rig(100.0, 0.0, 0.0, 0.5);
  const Eigen::Vector3d x = rig.backproject(0.0, 0.0, 25.0);
  EXPECT_DOUBLE_EQ(x.x(), 0.0);
  EXPECT_DOUBLE_EQ(x.y(), 0.0);
  EXPECT_DOUBLE_EQ(x.z(), 2.0);

  const CameraRig centered(300.0, 127.5, 63.5, 0.5);
  const Eigen::Vector3d axis = centered.backproject(127.5, 63.5, 10.0);
  EXPECT_DOUBLE_EQ(axis.x(), 0.0);
  EXPECT_DOUBLE_EQ(axis.y(), 0.0);
}

TEST(CameraRig, RejectsInvalidInput) {
  const CameraRig rig(100.0, 0.0, 0.0, 0.5);
  EXPECT_THROW(rig.project({1.0, 1.0, 0.0}), Error);
  EXPECT_THROW(rig.project({1.0, 1.0, -2.0}), Error);
  EXPECT_THROW(rig.backproject(3.0, 4.0, 0.0), Error);
  EXPECT_THROW(rig.backproject(3.0, 4.0, -1.0), Error);
  EXPECT_THROW(CameraRig(0.0, 0.0, 0.0, 0.5), Error);
  EXPECT_THROW(CameraRig(100.0, 0.0, 0.0, -0.5), Error);
  try {
    rig.backproject(0.0, 0.0, 0.0);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumerical);
  }
}

TEST(CameraRig, RoundTripsRandomPoints) {
  const CameraRig rig(721.5, 609.6, 172.9, 0.54);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> xy(-20.0, 20.0);
  std::uniform_real_distribution<double> z(0.5, 80.0);
  for (int i = 0; i < 2000; ++i) {
    const Eigen::Vector3d p(xy(rng), xy(rng), z(rng));
    const Projection q = rig.project(p);
    EXPECT_NEAR(q.disparity, rig.focal() * rig.baseline() / p.z(), 1e-9);
    const Eigen::Vector3d back = rig.backproject(q.x, q.y, q.disparity);
    EXPECT_LT((back - p).norm(), 1e-9);
    const Projection again = rig.project(back);
    EXPECT_NEAR(again.x, q.x, 1e-9);
    EXPECT_NEAR(again.y, q.y, 1e-9);
    EXPECT_NEAR(again.disparity, q.disparity, 1e-9);
  }
}

TEST(SceneFlowFromMotion, IdentityKeepsPixel) {
  const CameraRig rig(300.0, 127.5, 63.5, 0.5);
  const SceneFlowVector v = rig.sceneflow_from_motion(40.0, 20.0, 12.0, AffineMotion::identity());
  EXPECT_NEAR(v.u, 0.0, 1e-12);
  EXPECT_NEAR(v.v, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(v.d0, 12.0);
  EXPECT_NEAR(v.d1, 12.0, 1e-12);
}

TEST(SceneFlowFromMotion, ForwardMotionDoublesDisparity) {
  const CameraRig rig(100.0, 0.0, 0.0, 0.5);
  const SceneFlowVector v =
      rig.sceneflow_from_motion(0.0, 0.0, 25.0, AffineMotion::translation({0.0, 0.0, -1.0}));
  EXPECT_NEAR(v.u, 0.0, 1e-12);
  EXPECT_NEAR(v.v, 0.0, 1e-12);
  EXPECT_NEAR(v.d1, 50.0, 1e-12);
}

TEST(SceneFlowFromMotion, BaselineShiftReproducesStereo) {
  // Moving the camera by +B along x turns the left view into the right view.
  const CameraRig rig(300.0, 127.5, 63.5, 0.5);
  const AffineMotion to_right = AffineMotion::translation({-rig.baseline(), 0.0, 0.0});
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> px(0.0, 255.0);
  std::uniform_real_distribution<double> disp(1.0, 60.0);
  for (int i = 0; i < 200; ++i) {
    const double x = px(rng);
    const double y = px(rng) / 2.0;
    const double d = disp(rng);
    const SceneFlowVector v = rig.sceneflow_from_motion(x, y, d, to_right);
    EXPECT_NEAR(v.u, -d, 1e-9);
    EXPECT_NEAR(v.v, 0.0, 1e-9);
    EXPECT_NEAR(v.d1, d, 1e-9);
  }
}

TEST(SceneFlowFromMotion, BehindCameraIsInvalid) {
  const CameraRig rig(100.0, 0.0, 0.0, 0.5);
  const SceneFlowVector v =
      rig.sceneflow_from_motion(0.0, 0.0, 25.0, AffineMotion::translation({0.0, 0.0, -3.0}));
  EXPECT_FALSE(v.valid());
}

TEST(SceneFlowVector, InvalidSentinelIsDistinct) {
  EXPECT_FALSE(SceneFlowVector::invalid().valid());
  EXPECT_TRUE((SceneFlowVector{0.0, 0.0, 1.0, 1.0}.valid()));
  EXPECT_FALSE((SceneFlowVector{0.0, 0.0, 0.0, 1.0}.valid()));
  EXPECT_FALSE((SceneFlowVector{0.0, 0.0, 1.0, -1.0}.valid()));
}

TEST(Image, GrayUsesLumaWeights) {
  Image img(1, 1, 3);
  img.at(0, 0, 0) = 1.0f;
  img.at(0, 0, 1) = 0.5f;
  img.at(0, 0, 2) = 0.25f;
  EXPECT_NEAR(img.to_gray()(0, 0), 0.299 + 0.587 * 0.5 + 0.114 * 0.25, 1e-6);
}

TEST(Image, MirrorIsInvolution) {
  const Image img = random_image(17, 9, 3, 5);
  EXPECT_EQ(mirror_horizontal(mirror_horizontal(img)), img);
  EXPECT_EQ(mirror_horizontal(img).at(0, 3, 1), img.at(16, 3, 1));
}

TEST(StereoQuad, RejectsMismatchedSizes) {
  StereoQuad q = random_quad(16, 8, 1);
  q.right1 = random_image(16, 9, 1, 9);
  try {
    q.check_dimensions();
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
  EXPECT_THROW(build_scale_pyramid(q, 2), Error);
}

TEST(Pyramid, ZeroSubscalesIsIdentity) {
  const StereoQuad q = random_quad(32, 16, 11);
  const ScalePyramid p = build_scale_pyramid(q, 0);
  ASSERT_EQ(p.levels.size(), 1u);
  EXPECT_EQ(p.levels[0].factor, 1);
  EXPECT_EQ(p.levels[0].images.left0, q.left0);
  EXPECT_EQ(p.levels[0].images.right1, q.right1);
}

TEST(Pyramid, FactorsArePowersOfTwoAtFullResolution) {
  const StereoQuad q = random_quad(40, 24, 13);
  const ScalePyramid p = build_scale_pyramid(q, 3);
  ASSERT_EQ(p.levels.size(), 4u);
  for (int s = 0; s <= 3; ++s) {
    EXPECT_EQ(p.levels[s].factor, 1 << s);
    EXPECT_EQ(p.levels[s].images.left0.width(), 40);
    EXPECT_EQ(p.levels[s].images.left0.height(), 24);
  }
  EXPECT_EQ(p.subscales(), 3);
}

TEST(Pyramid, ConstantImageIsFixpoint) {
  const Image c(33, 17, 1, 0.625f);
  const ScalePyramid p = build_scale_pyramid({c, c, c, c}, 3);
  for (const auto& level : p.levels) {
    for (float v : level.images.left1.samples()) EXPECT_NEAR(v, 0.625f, 1e-6);
  }
}

TEST(Pyramid, Deterministic) {
  const StereoQuad q = random_quad(30, 20, 17);
  const ScalePyramid a = build_scale_pyramid(q, 2);
  const ScalePyramid b = build_scale_pyramid(q, 2);
  for (std::size_t s = 0; s < a.levels.size(); ++s) {
    EXPECT_EQ(a.levels[s].images.left0, b.levels[s].images.left0);
    EXPECT_EQ(a.levels[s].images.right1, b.levels[s].images.right1);
  }
}

TEST(Pyramid, AreaDownsampleAveragesBlocks) {
  Image img(3, 2, 1, std::vector<float>{0.f, 1.f, 0.5f, 1.f, 0.f, 0.25f});
  const Image d = area_downsample(img, 2);
  ASSERT_EQ(d.width(), 2);
  ASSERT_EQ(d.height(), 1);
  EXPECT_NEAR(d.at(0, 0), 0.5f, 1e-7);
  EXPECT_NEAR(d.at(1, 0), 0.375f, 1e-7);
}

TEST(Pyramid, LanczosSameSizeIsIdentity) {
  const Image img = random_image(12, 7, 1, 19);
  const Image r = lanczos_resize(img, 12, 7);
  for (std::size_t i = 0; i < img.samples().size(); ++i) {
    EXPECT_NEAR(r.samples()[i], img.samples()[i], 1e-6);
  }
}
