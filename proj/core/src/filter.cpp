#include "sceneflow/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace sceneflow {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool inside(double x, double y, int w, int h) {
  return x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0;
}

// Correspondences in right0, left1 and right1 all land in the image.
bool targets_inside(const SceneFlowVector& f, int x, int y, int w, int h) {
  return inside(x - f.d0, y, w, h) && inside(x + f.u, y + f.v, w, h) &&
         inside(x + f.u - f.d1, y + f.v, w, h);
}

bool similar(const SceneFlowVector& a, const SceneFlowVector& b, double tol) {
  return std::abs(a.u - b.u) <= tol && std::abs(a.v - b.v) <= tol &&
         std::abs(a.d0 - b.d0) <= tol && std::abs(a.d1 - b.d1) <= tol;
}

}  // namespace

SceneFlowField inverse_field(const StereoQuad& images, const MatcherOptions& options) {
  images.check_dimensions();
  const StereoQuad mirrored{mirror_horizontal(images.right1), mirror_horizontal(images.left1),
                            mirror_horizontal(images.right0), mirror_horizontal(images.left0)};
  const SceneFlowField m = match_scene_flow(mirrored, options).field.to_field();
  const int w = m.width();
  SceneFlowField out(w, m.height());
  out.cost = Grid<float>(w, m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      SceneFlowVector v = m.vectors(w - 1 - x, y);
      if (v.valid()) v.u = -v.u;
      out.vectors(x, y) = v;
      out.cost(x, y) = m.cost(w - 1 - x, y);
    }
  }
  return out;
}

SceneFlowVector forward_from_inverse(const SceneFlowVector& inv) {
  return {inv.d0 - inv.u - inv.d1, -inv.v, inv.d1, inv.d0};
}

std::size_t MatchSet::kept_count() const {
  return static_cast<std::size_t>(std::count(kept.data().begin(), kept.data().end(), 1));
}

MatchSet consistency_filter(const SceneFlowField& forward,
                            const SceneFlowField& inverse, double tau) {
  require_same_size(forward.vectors, inverse.vectors, "inverse field");
  const int w = forward.width();
  const int h = forward.height();
  MatchSet out{forward.vectors, Grid<double>(w, h, kInf), Grid<std::uint8_t>(w, h, 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const SceneFlowVector& f = forward.vectors(x, y);
      if (!f.valid() || !targets_inside(f, x, y, w, h)) continue;
      const long qx = std::lround(x + f.u - f.d1);
      const long qy = std::lround(y + f.v);
      if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
      const SceneFlowVector& inv = inverse.vectors(static_cast<int>(qx), static_cast<int>(qy));
      if (!inv.valid()) continue;
      const SceneFlowVector b = forward_from_inverse(inv);
      const double dev = std::max({std::abs(f.u - b.u), std::abs(f.v - b.v),
                                   std::abs(f.d0 - b.d0), std::abs(f.d1 - b.d1)});
      out.error(x, y) = dev;
      out.kept(x, y) = dev <= tau ? 1 : 0;
    }
  }
  return out;
}

MatchSet region_filter(const MatchSet& matches, double tolerance, int min_size,
                       RegionStats* stats) {
  const int w = matches.kept.width();
  const int h = matches.kept.height();
  MatchSet out = matches;
  Grid<std::uint8_t> visited(w, h, 0);
  RegionStats local;
  std::vector<std::size_t> region;
  std::queue<std::pair<int, int>> frontier;
  const int nx[4] = {1, -1, 0, 0};
  const int ny[4] = {0, 0, 1, -1};

  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      if (!matches.kept(sx, sy) || visited(sx, sy)) continue;
      region.clear();
      int readmitted = 0;
      visited(sx, sy) = 1;
      frontier.emplace(sx, sy);
      while (!frontier.empty()) {
        const auto [x, y] = frontier.front();
        frontier.pop();
        region.push_back(visited.index(x, y));
        // Re-admitted matches join the region but do not grow it further.
        if (!matches.kept(x, y)) continue;
        const SceneFlowVector& v = matches.vectors(x, y);
        for (int k = 0; k < 4; ++k) {
          const int qx = x + nx[k];
          const int qy = y + ny[k];
          if (!visited.contains(qx, qy) || visited(qx, qy)) continue;
          const SceneFlowVector& q = matches.vectors(qx, qy);
          if (!q.valid() || !similar(v, q, tolerance)) continue;
          if (!matches.kept(qx, qy) && !targets_inside(q, qx, qy, w, h)) continue;
          visited(qx, qy) = 1;
          if (!matches.kept(qx, qy)) ++readmitted;
          frontier.emplace(qx, qy);
        }
      }
      ++local.regions;
      const bool keep = static_cast<int>(region.size()) >= min_size;
      if (!keep) ++local.deleted_regions;
      else local.readmitted += readmitted;
      for (std::size_t i : region) out.kept[i] = keep ? 1 : 0;
    }
  }
  if (stats) *stats = local;
  return out;
}

std::size_t GeometryCandidates::count() const {
  std::size_t n = 0;
  for (double e : error.data()) n += std::isfinite(e) ? 1 : 0;
  return n;
}

GeometryCandidates disparity_fill(const MatchSet& joint,
                                  const Grid<SceneFlowVector>& forward,
                                  const DisparityMap& sgm, double tau) {
  require_same_size(joint.kept, forward, "forward field");
  require_same_size(joint.kept, sgm.disparity, "SGM disparity map");
  const int w = forward.width();
  const int h = forward.height();
  GeometryCandidates out{Grid<double>(w, h, 0.0), Grid<double>(w, h, kInf),
                         Grid<std::uint8_t>(w, h, 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const SceneFlowVector& f = forward(x, y);
      if (joint.kept(x, y)) {
        out.d0(x, y) = joint.vectors(x, y).d0;
        out.error(x, y) = joint.error(x, y);
        continue;
      }
      if (!(f.d0 > 0.0) || !sgm.valid(x, y) || x - f.d0 < 0.0) continue;
      const double diff = std::abs(f.d0 - sgm.disparity(x, y));
      if (diff <= tau) {
        out.d0(x, y) = f.d0;
        out.error(x, y) = diff;
        out.from_fill(x, y) = 1;
      }
    }
  }
  return out;
}

std::vector<std::size_t> select_per_block(const Grid<double>& error,
                                          const Grid<std::uint8_t>& candidate,
                                          int block) {
  require_same_size(error, candidate, "candidate mask");
  std::vector<std::size_t> picks;
  for (int by = 0; by < error.height(); by += block) {
    for (int bx = 0; bx < error.width(); bx += block) {
      std::size_t best = 0;
      double best_err = kInf;
      bool found = false;
      for (int y = by; y < std::min(by + block, error.height()); ++y) {
        for (int x = bx; x < std::min(bx + block, error.width()); ++x) {
          if (!candidate(x, y)) continue;
          const double e = error(x, y);
          if (!found || e < best_err) {
            best = error.index(x, y);
            best_err = e;
            found = true;
          }
        }
      }
      if (found) picks.push_back(best);
    }
  }
  return picks;
}

SeedSet sparsify(const MatchSet& joint, const GeometryCandidates& geometry) {
  require_same_size(joint.kept, geometry.error, "geometry candidates");
  const int w = joint.kept.width();
  const int h = joint.kept.height();
  SeedSet seeds;
  seeds.width = w;
  seeds.height = h;

  Grid<std::uint8_t> geo_mask(w, h, 0);
  for (std::size_t i = 0; i < geo_mask.size(); ++i) {
    geo_mask[i] = std::isfinite(geometry.error[i]) && geometry.d0[i] > 0.0 ? 1 : 0;
  }
  Grid<std::uint8_t> motion_mask = joint.kept;
  for (std::size_t i = 0; i < motion_mask.size(); ++i) {
    if (!joint.vectors[i].valid()) motion_mask[i] = 0;
  }

  const auto motion = select_per_block(joint.error, motion_mask);
  const auto fill = select_per_block(geometry.error, geo_mask);
  const int bw = (w + 2) / 3;
  Grid<long> block_motion(bw, (h + 2) / 3, -1);
  for (std::size_t i : motion) {
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    seeds.motion.push_back({x, y, joint.vectors[i], joint.error[i]});
    block_motion(x / 3, y / 3) = static_cast<long>(i);
  }
  for (std::size_t i : fill) {
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    if (block_motion(x / 3, y / 3) >= 0) continue;
    seeds.geometry.push_back({x, y, geometry.d0[i], geometry.error[i]});
  }
  for (const MotionSeed& m : seeds.motion) {
    seeds.geometry.push_back({m.x, m.y, m.vector.d0, m.error});
  }
  std::sort(seeds.geometry.begin(), seeds.geometry.end(),
            [](const GeometrySeed& a, const GeometrySeed& b) {
              return a.y != b.y ? a.y < b.y : a.x < b.x;
            });
  return seeds;
}

}  // namespace sceneflow
