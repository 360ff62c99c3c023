#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sceneflow/filter.hpp"

using namespace sceneflow;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Inverse-field vector at right1 that exactly explains forward vector f.
SceneFlowVector exact_inverse(const SceneFlowVector& f) {
  return {f.d1 - f.d0 - f.u, -f.v, f.d1, f.d0};
}

SceneFlowField uniform_field(int w, int h, const SceneFlowVector& v) {
  SceneFlowField f(w, h);
  for (auto& x : f.vectors.data()) x = v;
  return f;
}

MatchSet empty_set(int w, int h) {
  return {Grid<SceneFlowVector>(w, h, SceneFlowVector::invalid()), Grid<double>(w, h, kInf),
          Grid<std::uint8_t>(w, h, 0)};
}

// Fills a rectangle of kept matches sharing one vector.
void paint(MatchSet& m, int x0, int y0, int w, int h, const SceneFlowVector& v, bool kept = true) {
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) {
      m.vectors(x, y) = v;
      m.error(x, y) = 0.1;
      m.kept(x, y) = kept ? 1 : 0;
    }
  }
}

GrayImage noise_image(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  GrayImage g(w, h);
  for (float& v : g.data()) v = u(rng);
  return g;
}

}  // namespace

TEST(ForwardFromInverse, InvertsExactInverse) {
  const SceneFlowVector f{3.5, -1.25, 12.0, 10.5};
  const SceneFlowVector b = forward_from_inverse(exact_inverse(f));
  EXPECT_DOUBLE_EQ(b.u, f.u);
  EXPECT_DOUBLE_EQ(b.v, f.v);
  EXPECT_DOUBLE_EQ(b.d0, f.d0);
  EXPECT_DOUBLE_EQ(b.d1, f.d1);
}

TEST(ConsistencyFilter, ExactInverseKeepsInViewMatches) {
  const SceneFlowVector f{3.0, 1.0, 6.0, 5.0};
  const int w = 40;
  const int h = 30;
  const MatchSet m = consistency_filter(uniform_field(w, h, f), uniform_field(w, h, exact_inverse(f)), 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool in_view = x - 6 >= 0 && x + 3 < w && y + 1 < h && x + 3 - 5 >= 0;
      EXPECT_EQ(m.kept(x, y), in_view ? 1 : 0) << x << "," << y;
      if (in_view) {
        EXPECT_EQ(m.error(x, y), 0.0);
      }
    }
  }
}

TEST(ConsistencyFilter, InjectedErrorsAgainstThreshold) {
  const SceneFlowVector f{2.0, 0.0, 8.0, 8.0};
  const int w = 40;
  const int h = 20;
  SceneFlowField fwd = uniform_field(w, h, f);
  const SceneFlowField inv = uniform_field(w, h, exact_inverse(f));
  fwd.vectors(20, 10).d1 += 2.0;  // 2 px off in one component
  fwd.vectors(22, 10).u += 0.5;   // 0.5 px off, same right1 pixel after rounding
  fwd.vectors(24, 10).v = 0.4;
  const MatchSet m = consistency_filter(fwd, inv, 1.0);
  EXPECT_EQ(m.kept(20, 10), 0);
  EXPECT_DOUBLE_EQ(m.error(20, 10), 2.0);
  EXPECT_EQ(m.kept(22, 10), 1);
  EXPECT_DOUBLE_EQ(m.error(22, 10), 0.5);
  EXPECT_EQ(m.kept(24, 10), 1);
  EXPECT_NEAR(m.error(24, 10), 0.4, 1e-12);
  EXPECT_EQ(m.kept(30, 10), 1);
}

TEST(ConsistencyFilter, InvalidInverseRemoves) {
  const SceneFlowVector f{0.0, 0.0, 4.0, 4.0};
  SceneFlowField inv = uniform_field(20, 10, exact_inverse(f));
  inv.vectors(10, 5) = SceneFlowVector::invalid();
  const MatchSet m = consistency_filter(uniform_field(20, 10, f), inv, 1.0);
  EXPECT_EQ(m.kept(14, 5), 0);  // lands on (14 + 0 - 4, 5)
  EXPECT_TRUE(std::isinf(m.error(14, 5)));
  EXPECT_EQ(m.kept(15, 5), 1);
}

TEST(ConsistencyFilter, RejectsSizeMismatch) {
  EXPECT_THROW(consistency_filter(SceneFlowField(4, 4), SceneFlowField(4, 5), 1.0), Error);
}

TEST(InverseField, MatchesShiftedQuad) {
  const int w = 72;
  const int h = 48;
  const GrayImage base = noise_image(w + 32, h + 32, 3);
  auto crop = [&](int ox, int oy) {
    GrayImage g(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int sx = x + ox + 16;
        const int sy = y + oy + 16;
        float s = 0.0f;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) s += base.clamped(sx + dx, sy + dy);
        }
        g(x, y) = s / 9.0f;
      }
    }
    return Image::from_gray(g);
  };
  const SceneFlowVector f{3.0, 1.0, 6.0, 5.0};
  const StereoQuad q{crop(0, 0), crop(6, 0), crop(-3, -1), crop(2, -1)};
  MatcherOptions opt;
  opt.subscales = 2;
  opt.iterations = 8;
  const SceneFlowField inv = inverse_field(q, opt);
  const SceneFlowVector expect = exact_inverse(f);
  int good = 0;
  int total = 0;
  for (int y = 14; y < h - 14; ++y) {
    for (int x = 14; x < w - 14; ++x) {
      const SceneFlowVector& v = inv.vectors(x, y);
      ++total;
      // Offsets are rounded, so compare the three correspondence targets.
      if (std::lround(v.u) == expect.u && std::lround(v.v) == expect.v &&
          std::lround(v.d0) == expect.d0 && std::lround(v.u + v.d1) == expect.u + expect.d1) {
        ++good;
      }
    }
  }
  EXPECT_GT(good, 0.9 * total) << good << " of " << total;
}

TEST(RegionFilter, DeletesSmallRegions) {
  MatchSet m = empty_set(60, 40);
  paint(m, 0, 0, 10, 10, {1, 0, 5, 5});    // 100
  paint(m, 20, 0, 20, 10, {2, 0, 5, 5});   // 200
  paint(m, 0, 20, 16, 10, {-1, 0, 7, 7});  // 160
  RegionStats stats;
  const MatchSet out = region_filter(m, 1.0, 150, &stats);
  EXPECT_EQ(stats.regions, 3);
  EXPECT_EQ(stats.deleted_regions, 1);
  EXPECT_EQ(out.kept(5, 5), 0);
  EXPECT_EQ(out.kept(25, 5), 1);
  EXPECT_EQ(out.kept(5, 25), 1);
  EXPECT_EQ(out.kept_count(), 360u);
}

TEST(RegionFilter, DissimilarNeighborsSplitRegions) {
  MatchSet m = empty_set(30, 10);
  paint(m, 0, 0, 10, 10, {0, 0, 5, 5});
  paint(m, 10, 0, 10, 10, {3, 0, 5, 5});  // touches but differs by 3 in u
  RegionStats stats;
  const MatchSet out = region_filter(m, 1.0, 150, &stats);
  EXPECT_EQ(stats.regions, 2);
  EXPECT_EQ(out.kept_count(), 0u);
}

TEST(RegionFilter, ToleranceIsPerNeighborStep) {
  // A ramp of 0.5 px per column stays one region even though its ends differ.
  MatchSet m = empty_set(20, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 20; ++x) {
      m.vectors(x, y) = {0.5 * x, 0, 30, 30};
      m.error(x, y) = 0.0;
      m.kept(x, y) = 1;
    }
  }
  RegionStats stats;
  region_filter(m, 1.0, 1, &stats);
  EXPECT_EQ(stats.regions, 1);
}

TEST(RegionFilter, ReadmitsOneHopOnly) {
  MatchSet m = empty_set(30, 20);
  const SceneFlowVector v{1, 0, 5, 5};
  paint(m, 5, 5, 10, 10, v);
  m.vectors(15, 8) = v;  // removed, adjacent to the region
  m.vectors(16, 8) = v;  // removed, only adjacent to the re-admitted one
  m.vectors(4, 8) = {1, 0, 5, 5};
  RegionStats stats;
  const MatchSet out = region_filter(m, 1.0, 50, &stats);
  EXPECT_EQ(out.kept(15, 8), 1);
  EXPECT_EQ(out.kept(16, 8), 0);
  // (4, 8) - 5 falls outside the right0 image.
  EXPECT_EQ(out.kept(4, 8), 0);
  EXPECT_EQ(stats.readmitted, 1);
  EXPECT_EQ(out.kept_count(), 101u);
}

TEST(RegionFilter, ReadmittedPixelsCountTowardSize) {
  MatchSet m = empty_set(20, 20);
  const SceneFlowVector v{0, 0, 2, 2};
  paint(m, 5, 5, 7, 7, v);          // 49 kept
  paint(m, 12, 5, 1, 7, v, false);  // 7 removed neighbors
  const MatchSet out = region_filter(m, 1.0, 50);
  EXPECT_EQ(out.kept_count(), 56u);
}

TEST(Sgm, RecoversConstantShift) {
  const int w = 96;
  const int h = 48;
  const GrayImage base = noise_image(w + 16, h, 5);
  GrayImage left(w, h);
  GrayImage right(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      left(x, y) = base(x + 8, y);
      right(x, y) = base(x + 13, y);  // right(x - 5) == left(x)
    }
  }
  const DisparityMap d = sgm_disparity(left, right, {.max_disparity = 32});
  int valid = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!d.valid(x, y)) continue;
      ++valid;
      EXPECT_NEAR(d.disparity(x, y), 5.0, 0.5) << x << "," << y;
      EXPECT_GE(x - 5, 2);
      EXPECT_LT(x, w - 2);
      EXPECT_GE(y, 2);
      EXPECT_LT(y, h - 2);
    }
  }
  EXPECT_GT(valid, (w - 9) * (h - 4) * 9 / 10);
}

TEST(Sgm, IdenticalImagesGiveZeroDisparity) {
  const GrayImage g = noise_image(64, 32, 6);
  const DisparityMap d = sgm_disparity(g, g, {.max_disparity = 16});
  int valid = 0;
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (!d.valid(x, y)) continue;
      ++valid;
      EXPECT_NEAR(d.disparity(x, y), 0.0, 0.5);
    }
  }
  EXPECT_GT(valid, 60 * 28 * 9 / 10);
}

TEST(Sgm, ConstantImageNeverYieldsSpuriousDisparity) {
  // Paths entering from the left border favor d = 0 on textureless input.
  const GrayImage g(48, 24, 0.5f);
  const DisparityMap d = sgm_disparity(g, g, {.max_disparity = 16});
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 48; ++x) {
      if (d.valid(x, y)) {
        EXPECT_EQ(d.disparity(x, y), 0.0f) << x << "," << y;
      }
    }
  }
}

TEST(Sgm, CensusBitsMarkDarkerNeighbors) {
  GrayImage g(5, 5, 1.0f);
  g(0, 0) = 0.0f;  // first neighbor in raster order
  g(4, 4) = 0.0f;  // last neighbor
  const auto c = census_5x5(g);
  EXPECT_EQ(c(2, 2), (1u << 23) | 1u);
}

TEST(DisparityFill, AdmitsAgreeingPixels) {
  const int w = 10;
  const int h = 4;
  MatchSet joint = empty_set(w, h);
  joint.vectors(5, 1) = {0, 0, 4.0, 4.0};
  joint.error(5, 1) = 0.3;
  joint.kept(5, 1) = 1;
  Grid<SceneFlowVector> fwd(w, h, SceneFlowVector{0, 0, 4.0, 4.0});
  fwd(3, 2).d0 = 3.0;  // x - d0 stays in view
  fwd(2, 2).d0 = 3.0;  // x - d0 < 0
  DisparityMap sgm{Grid<float>(w, h, 4.5f), Grid<std::uint8_t>(w, h, 1)};
  sgm.valid(7, 3) = 0;
  sgm.disparity(3, 2) = 3.0f;
  sgm.disparity(2, 2) = 3.0f;
  sgm.disparity(8, 0) = 6.0f;
  const GeometryCandidates g = disparity_fill(joint, fwd, sgm, 1.0);
  EXPECT_EQ(g.d0(5, 1), 4.0);
  EXPECT_EQ(g.error(5, 1), 0.3);
  EXPECT_EQ(g.from_fill(5, 1), 0);
  EXPECT_EQ(g.from_fill(6, 1), 1);
  EXPECT_DOUBLE_EQ(g.error(6, 1), 0.5);
  EXPECT_EQ(g.error(3, 2), 0.0);
  EXPECT_TRUE(std::isinf(g.error(2, 2)));
  EXPECT_TRUE(std::isinf(g.error(7, 3)));
  EXPECT_TRUE(std::isinf(g.error(8, 0)));
  EXPECT_TRUE(std::isinf(g.error(3, 0)));  // x - d0 < 0
  // Columns 0..3 fail x - d0 >= 0 except (3, 2); (7, 3) and (8, 0) disagree.
  EXPECT_EQ(g.count(), static_cast<std::size_t>(w * h - 15 - 2));
}

TEST(Sparsify, PicksLowestErrorPerBlock) {
  Grid<double> err(7, 4, 1.0);
  Grid<std::uint8_t> cand(7, 4, 1);
  err(2, 1) = 0.2;
  err(1, 2) = 0.2;  // same error later in raster order loses
  err(6, 0) = 5.0;
  cand(4, 0) = cand(5, 0) = cand(3, 1) = cand(4, 1) = cand(5, 1) = 0;
  cand(3, 2) = cand(4, 2) = cand(5, 2) = cand(3, 0) = 0;
  const auto picks = select_per_block(err, cand);
  // Blocks: 3 x 2.  Block (1, 0) has no candidates.
  ASSERT_EQ(picks.size(), 5u);
  EXPECT_EQ(picks[0], err.index(2, 1));
  EXPECT_EQ(picks[1], err.index(6, 0) + 7);  // (6, 1) beats (6, 0)
  EXPECT_EQ(picks[2], err.index(0, 3));
}

TEST(Sparsify, SeedCounts) {
  const int w = 9;
  const int h = 6;
  MatchSet joint = empty_set(w, h);
  GeometryCandidates geo{Grid<double>(w, h, 0.0), Grid<double>(w, h, kInf),
                         Grid<std::uint8_t>(w, h, 0)};
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> e(0.0, 1.0);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < w; ++x) {
      joint.vectors(x, y) = {0, 0, 3.0 + x, 3.0};
      joint.error(x, y) = e(rng);
      joint.kept(x, y) = 1;
      geo.d0(x, y) = 3.0 + x;
      geo.error(x, y) = joint.error(x, y);
    }
  }
  geo.d0(4, 4) = 9.0;  // geometry-only candidate in the second block row
  geo.error(4, 4) = 0.7;
  geo.from_fill(4, 4) = 1;
  const SeedSet s = sparsify(joint, geo);
  EXPECT_EQ(s.motion.size(), 3u);
  ASSERT_EQ(s.geometry.size(), 4u);
  for (const MotionSeed& m : s.motion) {
    const bool found = std::any_of(s.geometry.begin(), s.geometry.end(), [&](const GeometrySeed& g) {
      return g.x == m.x && g.y == m.y && g.d0 == m.vector.d0;
    });
    EXPECT_TRUE(found);
    for (int y = m.y / 3 * 3; y < m.y / 3 * 3 + 3; ++y) {
      for (int x = m.x / 3 * 3; x < m.x / 3 * 3 + 3; ++x) EXPECT_LE(m.error, joint.error(x, y));
    }
  }
  EXPECT_EQ(s.geometry.back().x, 4);
  EXPECT_EQ(s.geometry.back().y, 4);
}
