#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sceneflow/edges.hpp"
#include "sceneflow/filter.hpp"
#include "sceneflow/geodesic.hpp"
#include "sceneflow/geometry.hpp"
#include "sceneflow/wls.hpp"

namespace sceneflow {

struct InterpolationOptions {
  int geometry_neighbors = 160;
  int motion_neighbors = 80;
  double alpha = 2.2;
  double nu = 0.001;
};

struct InterpolationResult {
  SceneFlowField field;
  GeodesicLabeling geometry_labeling;
  GeodesicLabeling motion_labeling;
  std::vector<PlaneFit> planes;     // one per geometry seed
  std::vector<AffineFit> motions;   // one per motion seed
  int plane_fallbacks = 0;
  int affine_fallbacks = 0;
  std::size_t invalid_pixels = 0;   // non-positive d0 or moved behind the camera
};

/// Kernel weights of a seed cell: the seed itself at distance 0 followed by
/// its neighbor list, as exp(-alpha * D).
std::vector<double> cell_weights(const std::vector<SeedNeighbor>& neighbors, double alpha);

/// Dense reconstruction from seeds.  Every pixel takes d0 from the plane of
/// its geodesically closest geometry seed and (u, v, d1) from the affine
/// motion of its closest motion seed, applied to the backprojected point.
/// Seed cells fit their models over the seed and its n - 1 closest seeds.
InterpolationResult interpolate(const SeedSet& seeds, const EdgeMap& edges,
                                const CameraRig& rig,
                                const InterpolationOptions& options = {});

/// Per-cell kernel-weighted mean of seed values over each seed's
/// neighborhood; returns one value per seed.
std::vector<double> nadaraya_watson(const GeodesicLabeling& labeling,
                                    std::span<const double> values, double alpha);

}  // namespace sceneflow
