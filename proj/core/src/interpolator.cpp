#include "sceneflow/interpolator.hpp"

#include <string>

#include "sceneflow/error.hpp"

namespace sceneflow {

std::vector<double> cell_weights(const std::vector<SeedNeighbor>& neighbors, double alpha) {
  std::vector<double> w;
  w.reserve(neighbors.size() + 1);
  w.push_back(1.0);
  for (const SeedNeighbor& n : neighbors) w.push_back(kernel_weight(n.distance, alpha));
  return w;
}

InterpolationResult interpolate(const SeedSet& seeds, const EdgeMap& edges,
                                const CameraRig& rig, const InterpolationOptions& options) {
  if (seeds.geometry.empty()) throw_error(ErrorKind::kNumerical, "interpolation: no geometry seeds");
  if (seeds.motion.empty()) throw_error(ErrorKind::kNumerical, "interpolation: no motion seeds");
  if (edges.width() != seeds.width || edges.height() != seeds.height) {
    throw_error(ErrorKind::kDimension,
                "interpolation: edge map is " + std::to_string(edges.width()) + "x" +
                    std::to_string(edges.height()) + ", seeds cover " +
                    std::to_string(seeds.width) + "x" + std::to_string(seeds.height));
  }
  if (!(options.alpha >= 0.0)) throw_error(ErrorKind::kInvalidArgument, "kernel alpha must be non-negative");

  InterpolationResult out;
  std::vector<PixelRef> geo_pixels;
  geo_pixels.reserve(seeds.geometry.size());
  for (const GeometrySeed& g : seeds.geometry) geo_pixels.push_back({g.x, g.y});
  std::vector<PixelRef> motion_pixels;
  motion_pixels.reserve(seeds.motion.size());
  for (const MotionSeed& m : seeds.motion) motion_pixels.push_back({m.x, m.y});

  out.geometry_labeling =
      geodesic_labeling(geo_pixels, edges, options.geometry_neighbors, options.nu);
  out.motion_labeling =
      geodesic_labeling(motion_pixels, edges, options.motion_neighbors, options.nu);

  out.planes.reserve(seeds.geometry.size());
  std::vector<PlaneSample> plane_samples;
  for (std::size_t s = 0; s < seeds.geometry.size(); ++s) {
    const auto& neighbors = out.geometry_labeling.neighbors[s];
    plane_samples.clear();
    const GeometrySeed& g = seeds.geometry[s];
    plane_samples.push_back({static_cast<double>(g.x), static_cast<double>(g.y), g.d0});
    for (const SeedNeighbor& n : neighbors) {
      const GeometrySeed& o = seeds.geometry[n.seed];
      plane_samples.push_back({static_cast<double>(o.x), static_cast<double>(o.y), o.d0});
    }
    out.planes.push_back(fit_plane(plane_samples, cell_weights(neighbors, options.alpha)));
    if (out.planes.back().fallback) ++out.plane_fallbacks;
  }

  std::vector<MotionSample> motion_points(seeds.motion.size());
  for (std::size_t s = 0; s < seeds.motion.size(); ++s) {
    const MotionSeed& m = seeds.motion[s];
    const SceneFlowVector& v = m.vector;
    if (!v.valid()) throw_error(ErrorKind::kInvalidArgument, "interpolation: invalid motion seed vector");
    motion_points[s].x0 = rig.backproject(m.x, m.y, v.d0);
    motion_points[s].x1 = rig.backproject(m.x + v.u, m.y + v.v, v.d1);
  }
  out.motions.reserve(seeds.motion.size());
  std::vector<MotionSample> samples;
  for (std::size_t s = 0; s < seeds.motion.size(); ++s) {
    const auto& neighbors = out.motion_labeling.neighbors[s];
    samples.clear();
    samples.push_back(motion_points[s]);
    for (const SeedNeighbor& n : neighbors) samples.push_back(motion_points[n.seed]);
    out.motions.push_back(fit_affine(samples, cell_weights(neighbors, options.alpha)));
    if (out.motions.back().fallback) ++out.affine_fallbacks;
  }

  out.field = SceneFlowField(seeds.width, seeds.height);
  for (int y = 0; y < seeds.height; ++y) {
    for (int x = 0; x < seeds.width; ++x) {
      const double d0 = out.planes[out.geometry_labeling.label(x, y)].model.evaluate(x, y);
      if (!(d0 > 0.0) || !std::isfinite(d0)) {
        ++out.invalid_pixels;
        continue;
      }
      const AffineMotion& motion = out.motions[out.motion_labeling.label(x, y)].motion;
      const SceneFlowVector v = rig.sceneflow_from_motion(x, y, d0, motion);
      if (!v.valid()) {
        ++out.invalid_pixels;
        continue;
      }
      out.field.vectors(x, y) = v;
    }
  }
  return out;
}

std::vector<double> nadaraya_watson(const GeodesicLabeling& labeling,
                                    std::span<const double> values, double alpha) {
  if (values.size() != labeling.neighbors.size()) {
    throw_error(ErrorKind::kDimension, "nadaraya_watson: one value per seed required");
  }
  std::vector<double> out(values.size());
  for (std::size_t s = 0; s < values.size(); ++s) {
    double num = values[s];
    double den = 1.0;
    for (const SeedNeighbor& n : labeling.neighbors[s]) {
      const double w = kernel_weight(n.distance, alpha);
      num += w * values[n.seed];
      den += w;
    }
    out[s] = num / den;
  }
  return out;
}

}  // namespace sceneflow
