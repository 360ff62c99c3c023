#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sceneflow/matcher.hpp"

using namespace sceneflow;

namespace {

constexpr int kW = 72;
constexpr int kH = 48;
constexpr int kMargin = 16;

// Smoothed noise large enough to crop every view from it.
GrayImage base_texture(std::uint32_t seed) {
  const int w = kW + 2 * kMargin;
  const int h = kH + 2 * kMargin;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  GrayImage noise(w, h);
  for (float& v : noise.data()) v = u(rng);
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float s = 0.0f;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) s += noise.clamped(x + dx, y + dy);
      }
      out(x, y) = s / 9.0f;
    }
  }
  return out;
}

Image crop(const GrayImage& base, int ox, int oy) {
  GrayImage g(kW, kH);
  for (int y = 0; y < kH; ++y) {
    for (int x = 0; x < kW; ++x) g(x, y) = base(x + ox + kMargin, y + oy + kMargin);
  }
  return Image::from_gray(g);
}

// Quad in which every left0 pixel moves by the same integer scene flow.
StereoQuad shifted_quad(const SceneFlowVector& f, std::uint32_t seed = 1) {
  const GrayImage b = base_texture(seed);
  const int u = static_cast<int>(f.u);
  const int v = static_cast<int>(f.v);
  const int d0 = static_cast<int>(f.d0);
  const int d1 = static_cast<int>(f.d1);
  return {crop(b, 0, 0), crop(b, d0, 0), crop(b, -u, -v), crop(b, d1 - u, -v)};
}

const SceneFlowVector kTruth{3.0, 1.0, 6.0, 5.0};

ScaleFeatures level_features(const StereoQuad& q, int subscales, int level) {
  const ScalePyramid p = build_scale_pyramid(q, subscales);
  return build_scale_features(p)[level];
}

bool interior(int x, int y) {
  return x >= 14 && y >= 14 && x < kW - 14 && y < kH - 14;
}

bool close(const SceneFlowVector& a, const SceneFlowVector& b, double tol) {
  return std::abs(a.u - b.u) <= tol && std::abs(a.v - b.v) <= tol &&
         std::abs(a.d0 - b.d0) <= tol && std::abs(a.d1 - b.d1) <= tol;
}

}  // namespace

TEST(MatchingCost, ZeroAtTrueCorrespondence) {
  const StereoQuad q = shifted_quad(kTruth);
  const ScaleFeatures f = level_features(q, 0, 0);
  const CostContext ctx{&f, 3};
  for (int y = 16; y < kH - 16; y += 5) {
    for (int x = 22; x < kW - 22; x += 7) {
      EXPECT_NEAR(matching_cost(ctx, x, y, kTruth), 0.0, 1e-4) << x << "," << y;
      EXPECT_GT(matching_cost(ctx, x, y, {kTruth.u + 2, kTruth.v, kTruth.d0, kTruth.d1}), 0.05);
      EXPECT_GT(matching_cost(ctx, x, y, {kTruth.u, kTruth.v, kTruth.d0 + 2, kTruth.d1}), 0.05);
      EXPECT_GT(matching_cost(ctx, x, y, {kTruth.u, kTruth.v, kTruth.d0, kTruth.d1 - 2}), 0.05);
    }
  }
}

TEST(MatchingCost, IsSumOfTerms) {
  const StereoQuad q = shifted_quad(kTruth, 4);
  const ScaleFeatures f = level_features(q, 1, 1);
  const CostContext ctx{&f, 3};
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> off(-6.0, 6.0);
  for (int i = 0; i < 200; ++i) {
    const int x = static_cast<int>(rng() % kW);
    const int y = static_cast<int>(rng() % kH);
    const SceneFlowVector v{off(rng), off(rng), 1.0 + std::abs(off(rng)), 1.0 + std::abs(off(rng))};
    const double sum = temporal_cost(ctx, x, y, v.u, v.v) + stereo_cost(ctx, x, y, v.d0) +
                       cross_cost(ctx, x, y, v.u - v.d1, v.v);
    EXPECT_NEAR(matching_cost(ctx, x, y, v), sum, 1e-9 * (1.0 + sum));
  }
}

TEST(MatchingCost, OffsetsRoundToNearestPixel) {
  // The cross term rounds u - d1 as a whole.
  const StereoQuad q = shifted_quad(kTruth);
  const ScaleFeatures f = level_features(q, 0, 0);
  const CostContext ctx{&f, 3};
  const double c = matching_cost(ctx, 30, 20, kTruth);
  EXPECT_EQ(matching_cost(ctx, 30, 20, {kTruth.u + 0.2, kTruth.v - 0.4, kTruth.d0 + 0.3, kTruth.d1 + 0.1}), c);
  EXPECT_NE(matching_cost(ctx, 30, 20, {kTruth.u + 0.6, kTruth.v, kTruth.d0, kTruth.d1}), c);
}

TEST(MatchingCost, WindowUsesScaleStride) {
  const StereoQuad q = shifted_quad(kTruth, 6);
  const ScaleFeatures f = level_features(q, 2, 2);
  ASSERT_EQ(f.factor, 4);
  const CostContext ctx{&f, 1};
  const SceneFlowVector v{2.0, 0.0, 4.0, 4.0};
  double expected = 0.0;
  for (int j = -1; j <= 1; ++j) {
    for (int i = -1; i <= 1; ++i) {
      const float* a = f.maps[0].at(30 + 4 * i, 20 + 4 * j);
      for (auto [m, dx, dy] : {std::tuple{2, 2, 0}, std::tuple{1, -4, 0}, std::tuple{3, -2, 0}}) {
        const float* b = f.maps[m].at(30 + 4 * i + dx, 20 + 4 * j + dy);
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (static_cast<double>(a[k]) - b[k]) * (static_cast<double>(a[k]) - b[k]);
        expected += std::sqrt(s);
      }
    }
  }
  EXPECT_NEAR(matching_cost(ctx, 30, 20, v), expected, 1e-9);
}

TEST(KdInit, FindsTranslationOnMostInteriorCells) {
  const StereoQuad q = shifted_quad(kTruth, 2);
  const ScaleFeatures f = level_features(q, 0, 0);
  MatcherOptions opt;
  const KdForest forest = build_kd_forest(f, opt);
  const MatchField field = kdtree_init(f, forest, opt);
  int exact = 0;
  int total = 0;
  for (int y = 0; y < kH; ++y) {
    for (int x = 0; x < kW; ++x) {
      const SceneFlowVector& v = field.vectors(x, y);
      if (v.valid()) {
        EXPECT_GT(v.d0, 0.0);
        EXPECT_GT(v.d1, 0.0);
        EXPECT_EQ(field.cost(x, y), matching_cost({&f, opt.window_radius}, x, y, v));
      }
      if (!interior(x, y)) continue;
      ++total;
      if (close(v, kTruth, 0.0)) ++exact;
    }
  }
  EXPECT_GT(exact, total / 2) << exact << " of " << total;
}

TEST(SearchRng, OpenUnitInterval) {
  SearchRng rng(3);
  double lo = 1.0;
  double hi = -1.0;
  for (int i = 0; i < 100000; ++i) {
    const double s = rng.symmetric_unit();
    ASSERT_GT(s, -1.0);
    ASSERT_LT(s, 1.0);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  EXPECT_LT(lo, -0.99);
  EXPECT_GT(hi, 0.99);
}

TEST(Propagation, CostOnlyDecreasesAndStaysConsistent) {
  const StereoQuad q = shifted_quad(kTruth, 3);
  const ScaleFeatures f = level_features(q, 1, 1);
  MatcherOptions opt;
  opt.verify_costs = true;
  int accepted = 0;
  opt.on_accept = [&](const MatcherOptions::Acceptance& a) {
    ++accepted;
    EXPECT_LT(a.new_cost, a.old_cost);
    EXPECT_EQ(a.factor, 2);
  };
  const KdForest forest = build_kd_forest(f, opt);
  MatchField field = kdtree_init(f, forest, opt);
  SearchRng rng(0);
  propagate_and_search(field, f, 6, rng, opt);
  EXPECT_GT(accepted, 0);
  const CostContext ctx{&f, opt.window_radius};
  for (int gy = 0; gy < field.grid_height(); ++gy) {
    for (int gx = 0; gx < field.grid_width(); ++gx) {
      if (!field.vectors(gx, gy).valid()) continue;
      EXPECT_EQ(field.cost(gx, gy), matching_cost(ctx, gx * 2, gy * 2, field.vectors(gx, gy)));
    }
  }
}

TEST(Propagation, RejectsScaleMismatch) {
  const StereoQuad q = shifted_quad(kTruth);
  const ScaleFeatures f = level_features(q, 1, 1);
  MatchField field(kW, kH, 1);
  SearchRng rng(0);
  EXPECT_THROW(propagate_and_search(field, f, 1, rng, {}), Error);
}

TEST(Upsample, KeepsCoincidentCells) {
  const StereoQuad q = shifted_quad(kTruth, 7);
  const ScalePyramid p = build_scale_pyramid(q, 1);
  const auto feats = build_scale_features(p);
  MatchField coarse(kW, kH, 2);
  coarse.vectors(5, 4) = kTruth;
  coarse.cost(5, 4) = 1.0;
  const MatchField fine = upsample_field(coarse, feats[0], {});
  EXPECT_EQ(fine.factor, 1);
  EXPECT_EQ(fine.grid_width(), kW);
  EXPECT_TRUE(close(fine.vectors(10, 8), kTruth, 0.0));
  EXPECT_EQ(fine.cost(10, 8), matching_cost({&feats[0], 3}, 10, 8, kTruth));
  EXPECT_FALSE(fine.vectors(11, 8).valid());
  EXPECT_TRUE(std::isinf(fine.cost(11, 8)));
}

TEST(MatchSceneFlow, RecoversUniformTranslation) {
  const StereoQuad q = shifted_quad(kTruth, 8);
  MatcherOptions opt;
  opt.subscales = 2;
  opt.iterations = 8;
  const MatchResult r = match_scene_flow(q, opt);
  ASSERT_EQ(r.captured_variance.size(), 3u);
  int good = 0;
  int total = 0;
  for (int y = 0; y < kH; ++y) {
    for (int x = 0; x < kW; ++x) {
      if (!interior(x, y)) continue;
      ++total;
      if (close(r.field.vectors(x, y), kTruth, 0.5)) ++good;
    }
  }
  EXPECT_GT(good, 0.9 * total) << good << " of " << total;
}

TEST(MatchSceneFlow, DeterministicForSeed) {
  const StereoQuad q = shifted_quad(kTruth, 9);
  MatcherOptions opt;
  opt.subscales = 1;
  opt.iterations = 4;
  opt.seed = 42;
  const MatchResult a = match_scene_flow(q, opt);
  const MatchResult b = match_scene_flow(q, opt);
  for (int y = 0; y < kH; ++y) {
    for (int x = 0; x < kW; ++x) {
      const SceneFlowVector& va = a.field.vectors(x, y);
      const SceneFlowVector& vb = b.field.vectors(x, y);
      if (!va.valid()) {
        ASSERT_FALSE(vb.valid());
        continue;
      }
      ASSERT_EQ(va.u, vb.u);
      ASSERT_EQ(va.v, vb.v);
      ASSERT_EQ(va.d0, vb.d0);
      ASSERT_EQ(va.d1, vb.d1);
    }
  }
}

TEST(MatchSceneFlow, RejectsMismatchedViews) {
  StereoQuad q = shifted_quad(kTruth);
  q.left1 = Image(kW + 1, kH, 1);
  EXPECT_THROW(match_scene_flow(q, {}), Error);
}
