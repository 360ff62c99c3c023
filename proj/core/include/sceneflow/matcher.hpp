#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "sceneflow/features.hpp"
#include "sceneflow/geometry.hpp"
#include "sceneflow/kdtree.hpp"
#include "sceneflow/pyramid.hpp"

namespace sceneflow {

/// Feature data for one pyramid level: 3-channel SIFT-PCA maps for the cost
/// and grayscale images for the WHT initialization descriptors.
struct ScaleFeatures {
  int factor = 1;
  std::array<FeatureMap, 4> maps;   // left0, right0, left1, right1
  std::array<GrayImage, 4> grays;   // same order
  double captured_variance = 0.0;
};

std::vector<ScaleFeatures> build_scale_features(const ScalePyramid& pyramid);

/// Inputs of the matching cost at one scale.
struct CostContext {
  const ScaleFeatures* features = nullptr;
  int window_radius = 3;  // 7x7 window

  int factor() const noexcept { return features->factor; }
};

/// Sum over the stride-n window of the temporal, stereo and cross feature
/// distances.  Offsets are rounded to the nearest pixel and samples outside
/// the image replicate the border.
double matching_cost(const CostContext& ctx, int x, int y, const SceneFlowVector& v);

/// Individual terms of the cost; matching_cost is their sum.
double temporal_cost(const CostContext& ctx, int x, int y, double u, double v);
double stereo_cost(const CostContext& ctx, int x, int y, double d0);
double cross_cost(const CostContext& ctx, int x, int y, double u_minus_d1, double v);

/// Dense candidate field on the stride-`factor` sample grid: cell (i, j)
/// holds the vector for full-resolution pixel (i * factor, j * factor).
struct MatchField {
  int factor = 1;
  int image_width = 0;
  int image_height = 0;
  Grid<SceneFlowVector> vectors;
  Grid<double> cost;  // +inf for the invalid sentinel

  MatchField() = default;
  MatchField(int image_w, int image_h, int n);

  int grid_width() const noexcept { return vectors.width(); }
  int grid_height() const noexcept { return vectors.height(); }

  /// Full-resolution SceneFlowField (only meaningful for factor 1).
  SceneFlowField to_field() const;
};

/// The three initialization trees: left1 (unconstrained), right0 and right1
/// (row-constrained).  Built over the WHT descriptors of the sample grid.
struct KdForest {
  int factor = 1;
  KdTree temporal;
  RowKdTrees stereo;
  RowKdTrees cross;
};

struct MatcherOptions {
  int subscales = 3;
  int iterations = 12;
  int window_radius = 3;
  int wht_patch = 8;
  int wht_coefficients = 16;
  int leaf_size = 8;
  std::uint64_t seed = 0;

  /// Re-evaluates the stored cost at a few random cells after every
  /// iteration and throws on mismatch.
  bool verify_costs = false;

  struct Acceptance {
    int x = 0;  // grid cell
    int y = 0;
    int factor = 1;
    double old_cost = 0.0;
    double new_cost = 0.0;
    bool from_random_search = false;
  };
  /// Called for every accepted propagation or random-search update.
  std::function<void(const Acceptance&)> on_accept;
};

KdForest build_kd_forest(const ScaleFeatures& features, const MatcherOptions& options);

/// Initializes every cell of the sample grid from the forest: each query
/// returns one leaf per tree and the combination of temporal, stereo and
/// cross candidates with the lowest cost is kept.
MatchField kdtree_init(const ScaleFeatures& features, const KdForest& forest,
                       const MatcherOptions& options);

/// Random offsets in the open interval ]-1, 1[.
class SearchRng {
 public:
  explicit SearchRng(std::uint64_t seed) : engine_(seed) {}
  double symmetric_unit();
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Runs `iterations` rounds of quadrant-ordered propagation followed by one
/// random-search pass.  A cell only ever changes when its cost strictly
/// decreases.
void propagate_and_search(MatchField& field, const ScaleFeatures& features,
                          int iterations, SearchRng& rng,
                          const MatcherOptions& options);

/// Transfers a field to the next finer scale (factor / 2).  Cells that
/// coincide with coarse cells keep their vectors (costs re-evaluated), the
/// others start invalid and are filled by propagation.
MatchField upsample_field(const MatchField& coarse, const ScaleFeatures& finer,
                          const MatcherOptions& options);

struct MatchResult {
  MatchField field;  // factor 1
  std::vector<double> captured_variance;  // per level
};

/// Full multi-scale matching with left0 as the reference view.
MatchResult match_scene_flow(const StereoQuad& images, const MatcherOptions& options);

}  // namespace sceneflow
