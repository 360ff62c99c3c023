#include "sceneflow/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sceneflow/error.hpp"

namespace sceneflow {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double dist3(const float* a, const float* b) {
  const double dx = static_cast<double>(a[0]) - b[0];
  const double dy = static_cast<double>(a[1]) - b[1];
  const double dz = static_cast<double>(a[2]) - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline int round_offset(double v) { return static_cast<int>(std::lround(v)); }

inline int clampi(int v, int hi) { return v < 0 ? 0 : (v > hi ? hi : v); }

// Sum over the window of the distance between the reference map at the
// window sample and `target` at the sample shifted by (dx, dy).
double window_distance(const CostContext& ctx, const FeatureMap& target, int x,
                       int y, int dx, int dy) {
  const FeatureMap& ref = ctx.features->maps[0];
  const int n = ctx.factor();
  const int r = ctx.window_radius;
  const int wmax = ref.width - 1;
  const int hmax = ref.height - 1;
  double sum = 0.0;
  for (int j = -r; j <= r; ++j) {
    const int sy = clampi(y + j * n, hmax);
    const int ty = clampi(sy + dy, hmax);
    for (int i = -r; i <= r; ++i) {
      const int sx = clampi(x + i * n, wmax);
      const int tx = clampi(sx + dx, wmax);
      sum += dist3(ref.at(sx, sy), target.at(tx, ty));
    }
  }
  return sum;
}

bool plausible(const SceneFlowVector& v) {
  return std::isfinite(v.u) && std::isfinite(v.v) && v.d0 > 0.0 && v.d1 > 0.0;
}

}  // namespace

std::vector<ScaleFeatures> build_scale_features(const ScalePyramid& pyramid) {
  std::vector<ScaleFeatures> out;
  out.reserve(pyramid.levels.size());
  for (const auto& level : pyramid.levels) {
    ScaleFeatures sf;
    sf.factor = level.factor;
    SiftPcaFeatures f = sift_pca_features(level.images);
    sf.maps = std::move(f.maps);
    sf.captured_variance = f.basis.captured_variance;
    sf.grays = {level.images.left0.to_gray(), level.images.right0.to_gray(),
                level.images.left1.to_gray(), level.images.right1.to_gray()};
    out.push_back(std::move(sf));
  }
  return out;
}

double temporal_cost(const CostContext& ctx, int x, int y, double u, double v) {
  return window_distance(ctx, ctx.features->maps[2], x, y, round_offset(u),
                         round_offset(v));
}

double stereo_cost(const CostContext& ctx, int x, int y, double d0) {
  return window_distance(ctx, ctx.features->maps[1], x, y, -round_offset(d0), 0);
}

double cross_cost(const CostContext& ctx, int x, int y, double u_minus_d1,
                  double v) {
  return window_distance(ctx, ctx.features->maps[3], x, y,
                         round_offset(u_minus_d1), round_offset(v));
}

double matching_cost(const CostContext& ctx, int x, int y,
                     const SceneFlowVector& vec) {
  const auto& maps = ctx.features->maps;
  const FeatureMap& ref = maps[0];
  const int n = ctx.factor();
  const int r = ctx.window_radius;
  const int wmax = ref.width - 1;
  const int hmax = ref.height - 1;
  const int fu = round_offset(vec.u);
  const int fv = round_offset(vec.v);
  const int sd = -round_offset(vec.d0);
  const int cu = round_offset(vec.u - vec.d1);
  double sum = 0.0;
  for (int j = -r; j <= r; ++j) {
    const int sy = clampi(y + j * n, hmax);
    const int ty = clampi(sy + fv, hmax);
    for (int i = -r; i <= r; ++i) {
      const int sx = clampi(x + i * n, wmax);
      const float* a = ref.at(sx, sy);
      sum += dist3(a, maps[2].at(clampi(sx + fu, wmax), ty));
      sum += dist3(a, maps[1].at(clampi(sx + sd, wmax), sy));
      sum += dist3(a, maps[3].at(clampi(sx + cu, wmax), ty));
    }
  }
  return sum;
}

MatchField::MatchField(int image_w, int image_h, int n)
    : factor(n),
      image_width(image_w),
      image_height(image_h),
      vectors((image_w + n - 1) / n, (image_h + n - 1) / n,
              SceneFlowVector::invalid()),
      cost((image_w + n - 1) / n, (image_h + n - 1) / n, kInf) {}

SceneFlowField MatchField::to_field() const {
  SceneFlowField field(image_width, image_height);
  field.cost = Grid<float>(image_width, image_height, std::numeric_limits<float>::infinity());
  for (int y = 0; y < image_height; ++y) {
    for (int x = 0; x < image_width; ++x) {
      const int gx = std::min(x / factor, grid_width() - 1);
      const int gy = std::min(y / factor, grid_height() - 1);
      field.vectors(x, y) = vectors(gx, gy);
      field.cost(x, y) = static_cast<float>(cost(gx, gy));
    }
  }
  return field;
}

KdForest build_kd_forest(const ScaleFeatures& features,
                         const MatcherOptions& options) {
  const int n = features.factor;
  const int w = features.grays[0].width();
  const int h = features.grays[0].height();
  const int gw = (w + n - 1) / n;
  const int gh = (h + n - 1) / n;
  const int dim = options.wht_coefficients;

  auto describe = [&](const GrayImage& img, int x, int y) {
    return wht_descriptor(img, x, y, options.wht_patch, dim, n);
  };

  KdForest forest;
  forest.factor = n;
  {
    std::vector<float> desc;
    std::vector<PixelRef> pixels;
    desc.reserve(static_cast<std::size_t>(gw) * gh * dim);
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        const auto d = describe(features.grays[2], gx * n, gy * n);
        desc.insert(desc.end(), d.begin(), d.end());
        pixels.push_back({gx * n, gy * n});
      }
    }
    forest.temporal = KdTree(dim, std::move(desc), std::move(pixels), options.leaf_size);
  }
  auto row_trees = [&](const GrayImage& img) {
    std::vector<std::vector<float>> descs(gh);
    std::vector<std::vector<PixelRef>> pixels(gh);
    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        const auto d = describe(img, gx * n, gy * n);
        descs[gy].insert(descs[gy].end(), d.begin(), d.end());
        pixels[gy].push_back({gx * n, gy * n});
      }
    }
    return RowKdTrees(dim, std::move(descs), std::move(pixels), options.leaf_size);
  };
  forest.stereo = row_trees(features.grays[1]);
  forest.cross = row_trees(features.grays[3]);
  return forest;
}

MatchField kdtree_init(const ScaleFeatures& features, const KdForest& forest,
                       const MatcherOptions& options) {
  const int n = features.factor;
  const int w = features.grays[0].width();
  const int h = features.grays[0].height();
  MatchField field(w, h, n);
  const CostContext ctx{&features, options.window_radius};

  for (int gy = 0; gy < field.grid_height(); ++gy) {
    for (int gx = 0; gx < field.grid_width(); ++gx) {
      const int x = gx * n;
      const int y = gy * n;
      const auto q = wht_descriptor(features.grays[0], x, y, options.wht_patch,
                                    options.wht_coefficients, n);

      // The cost is a sum of a temporal term in (u, v), a stereo term in d0
      // and a cross term in (u - d1, v), so the best of all leaf combinations
      // is found by minimizing the stereo term and, per temporal candidate,
      // the cross term independently.
      double best_stereo = kInf;
      double best_d0 = 0.0;
      for (const PixelRef& s : forest.stereo.query(q, gy)) {
        const double d0 = x - s.x;
        if (d0 <= 0.0) continue;
        const double c = stereo_cost(ctx, x, y, d0);
        if (c < best_stereo) {
          best_stereo = c;
          best_d0 = d0;
        }
      }
      if (!std::isfinite(best_stereo)) continue;

      double best_motion = kInf;
      SceneFlowVector best = SceneFlowVector::invalid();
      for (const PixelRef& t : forest.temporal.query(q)) {
        const double u = t.x - x;
        const double v = t.y - y;
        const double ct = temporal_cost(ctx, x, y, u, v);
        if (ct >= best_motion) continue;
        for (const PixelRef& c : forest.cross.query(q, t.y / n)) {
          const double d1 = t.x - c.x;
          if (d1 <= 0.0) continue;
          const double total = ct + cross_cost(ctx, x, y, u - d1, v);
          if (total < best_motion) {
            best_motion = total;
            best = {u, v, best_d0, d1};
          }
        }
      }
      if (!best.valid()) continue;
      field.vectors(gx, gy) = best;
      field.cost(gx, gy) = matching_cost(ctx, x, y, best);
    }
  }
  return field;
}

double SearchRng::symmetric_unit() {
  for (;;) {
    const double r = static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0, 1)
    const double s = 2.0 * r - 1.0;
    if (s > -1.0) return s;
  }
}

void propagate_and_search(MatchField& field, const ScaleFeatures& features,
                          int iterations, SearchRng& rng,
                          const MatcherOptions& options) {
  const int n = field.factor;
  if (features.factor != n) {
    throw_error(ErrorKind::kInvalidArgument, "feature scale does not match field scale");
  }
  const CostContext ctx{&features, options.window_radius};
  const int gw = field.grid_width();
  const int gh = field.grid_height();
  auto& vec = field.vectors;
  auto& cost = field.cost;

  auto try_adopt = [&](int gx, int gy, int nx, int ny) {
    if (!vec.contains(nx, ny)) return;
    const SceneFlowVector& cand = vec(nx, ny);
    if (!plausible(cand)) return;
    const double c = matching_cost(ctx, gx * n, gy * n, cand);
    if (c < cost(gx, gy)) {
      if (options.on_accept) options.on_accept({gx, gy, n, cost(gx, gy), c, false});
      vec(gx, gy) = cand;
      cost(gx, gy) = c;
    }
  };

  SearchRng verify_rng(options.seed ^ 0x9e3779b97f4a7c15ULL);

  for (int it = 0; it < iterations; ++it) {
    // Quadrant order: TL->BR, BR->TL, TR->BL, BL->TR.
    const int dir = it % 4;
    const bool x_forward = dir == 0 || dir == 3;
    const bool y_forward = dir == 0 || dir == 2;
    const int dx = x_forward ? -1 : 1;  // scan-preceding neighbor offsets
    const int dy = y_forward ? -1 : 1;
    for (int k = 0; k < gh; ++k) {
      const int gy = y_forward ? k : gh - 1 - k;
      for (int m = 0; m < gw; ++m) {
        const int gx = x_forward ? m : gw - 1 - m;
        try_adopt(gx, gy, gx + dx, gy);
        try_adopt(gx, gy, gx, gy + dy);
      }
    }

    for (int gy = 0; gy < gh; ++gy) {
      for (int gx = 0; gx < gw; ++gx) {
        const double ou = rng.symmetric_unit() * n;
        const double ov = rng.symmetric_unit() * n;
        const double od0 = rng.symmetric_unit() * n;
        const double od1 = rng.symmetric_unit() * n;
        const SceneFlowVector& cur = vec(gx, gy);
        if (!plausible(cur)) continue;
        const SceneFlowVector cand{cur.u + ou, cur.v + ov, cur.d0 + od0, cur.d1 + od1};
        if (!plausible(cand)) continue;
        const double c = matching_cost(ctx, gx * n, gy * n, cand);
        if (c < cost(gx, gy)) {
          if (options.on_accept) options.on_accept({gx, gy, n, cost(gx, gy), c, true});
          vec(gx, gy) = cand;
          cost(gx, gy) = c;
        }
      }
    }

    if (options.verify_costs) {
      for (int s = 0; s < 16; ++s) {
        const int gx = static_cast<int>(verify_rng.next() % static_cast<std::uint64_t>(gw));
        const int gy = static_cast<int>(verify_rng.next() % static_cast<std::uint64_t>(gh));
        if (!plausible(vec(gx, gy))) continue;
        const double c = matching_cost(ctx, gx * n, gy * n, vec(gx, gy));
        if (c != cost(gx, gy)) {
          throw_error(ErrorKind::kNumerical,
                      "stored matching cost diverged at cell (" + std::to_string(gx) +
                          ", " + std::to_string(gy) + ")");
        }
      }
    }
  }
}

MatchField upsample_field(const MatchField& coarse, const ScaleFeatures& finer,
                          const MatcherOptions& options) {
  const int n = coarse.factor / 2;
  if (n < 1 || finer.factor != n) {
    throw_error(ErrorKind::kInvalidArgument, "upsample_field needs the next finer scale");
  }
  MatchField fine(coarse.image_width, coarse.image_height, n);
  const CostContext ctx{&finer, options.window_radius};
  for (int gy = 0; gy < fine.grid_height(); gy += 2) {
    for (int gx = 0; gx < fine.grid_width(); gx += 2) {
      const SceneFlowVector& v = coarse.vectors(gx / 2, gy / 2);
      if (!plausible(v)) continue;
      fine.vectors(gx, gy) = v;
      fine.cost(gx, gy) = matching_cost(ctx, gx * n, gy * n, v);
    }
  }
  return fine;
}

MatchResult match_scene_flow(const StereoQuad& images, const MatcherOptions& options) {
  images.check_dimensions();
  const ScalePyramid pyramid = build_scale_pyramid(images, options.subscales);
  const std::vector<ScaleFeatures> features = build_scale_features(pyramid);

  MatchResult result;
  for (const auto& f : features) result.captured_variance.push_back(f.captured_variance);

  const ScaleFeatures& coarsest = features.back();
  const KdForest forest = build_kd_forest(coarsest, options);
  MatchField field = kdtree_init(coarsest, forest, options);

  SearchRng rng(options.seed);
  for (int s = options.subscales; s >= 0; --s) {
    if (s != options.subscales) field = upsample_field(field, features[s], options);
    propagate_and_search(field, features[s], options.iterations, rng, options);
  }
  result.field = std::move(field);
  return result;
}

}  // namespace sceneflow
