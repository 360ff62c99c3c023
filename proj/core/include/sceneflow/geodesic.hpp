#pragma once

#include <span>
#include <vector>

#include "sceneflow/edges.hpp"
#include "sceneflow/grid.hpp"
#include "sceneflow/kdtree.hpp"

namespace sceneflow {

struct SeedNeighbor {
  int seed = 0;
  double distance = 0.0;
};

/// Nearest-seed labeling of every pixel plus each seed's closest other seeds.
struct GeodesicLabeling {
  Grid<int> label;
  Grid<double> distance;
  /// neighbors[s] excludes s itself, holds min(n - 1, seeds - 1) entries and is
  /// sorted by (distance, seed id).
  std::vector<std::vector<SeedNeighbor>> neighbors;
};

/// Cost of the 4-connected grid edge between p and q.
inline double geodesic_edge_cost(float bp, float bq, double nu) {
  return 0.5 * (static_cast<double>(bp) + static_cast<double>(bq)) + nu;
}

/// Multi-source shortest paths over the 4-connected grid with edge cost
/// (B(p) + B(q)) / 2 + nu.  Equal distances go to the smaller seed id.
/// Seed-to-seed distances are exact single-source geodesic distances,
/// explored only as far as the n - 1 closest seeds.  Duplicate seed pixels
/// are rejected.
GeodesicLabeling geodesic_labeling(std::span<const PixelRef> seeds,
                                   const EdgeMap& edges, int n_neighbors,
                                   double nu = 0.001);

/// Single-source geodesic distances to every pixel.
Grid<double> geodesic_distances(PixelRef source, const EdgeMap& edges,
                                double nu = 0.001);

}  // namespace sceneflow
