#include "sceneflow/geodesic.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <tuple>

#include "sceneflow/error.hpp"

namespace sceneflow {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

struct Entry {
  double dist;
  int label;
  int index;
  bool operator>(const Entry& o) const {
    return std::tie(dist, label, index) > std::tie(o.dist, o.label, o.index);
  }
};

using MinHeap = std::priority_queue<Entry, std::vector<Entry>, std::greater<>>;

}  // namespace

Grid<double> geodesic_distances(PixelRef source, const EdgeMap& edges, double nu) {
  const int w = edges.width();
  const int h = edges.height();
  if (source.x < 0 || source.y < 0 || source.x >= w || source.y >= h) {
    throw_error(ErrorKind::kInvalidArgument, "geodesic source outside the edge map");
  }
  Grid<double> dist(w, h, kInf);
  std::vector<std::uint8_t> done(dist.size(), 0);
  MinHeap heap;
  const int s = static_cast<int>(dist.index(source.x, source.y));
  dist[s] = 0.0;
  heap.push({0.0, 0, s});
  while (!heap.empty()) {
    const Entry e = heap.top();
    heap.pop();
    if (done[e.index] || e.dist != dist[e.index]) continue;
    done[e.index] = 1;
    const int x = e.index % w;
    const int y = e.index / w;
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k];
      const int ny = y + kDy[k];
      if (!dist.contains(nx, ny)) continue;
      const int q = static_cast<int>(dist.index(nx, ny));
      const double nd = e.dist + geodesic_edge_cost(edges(x, y), edges(nx, ny), nu);
      if (nd < dist[q]) {
        dist[q] = nd;
        heap.push({nd, 0, q});
      }
    }
  }
  return dist;
}

GeodesicLabeling geodesic_labeling(std::span<const PixelRef> seeds,
                                   const EdgeMap& edges, int n_neighbors, double nu) {
  if (seeds.empty()) throw_error(ErrorKind::kInvalidArgument, "geodesic labeling needs at least one seed");
  if (n_neighbors < 1) throw_error(ErrorKind::kInvalidArgument, "neighborhood size must be positive");
  if (!(nu > 0.0)) throw_error(ErrorKind::kInvalidArgument, "geodesic base cost must be positive");
  const int w = edges.width();
  const int h = edges.height();
  const int count = static_cast<int>(seeds.size());

  GeodesicLabeling out;
  out.label = Grid<int>(w, h, -1);
  out.distance = Grid<double>(w, h, kInf);
  Grid<int> seed_at(w, h, -1);
  for (int s = 0; s < count; ++s) {
    const PixelRef p = seeds[s];
    if (!seed_at.contains(p.x, p.y)) {
      throw_error(ErrorKind::kInvalidArgument, "seed outside the edge map");
    }
    if (seed_at(p.x, p.y) != -1) {
      throw_error(ErrorKind::kInvalidArgument,
                  "duplicate seed at (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")");
    }
    seed_at(p.x, p.y) = s;
  }

  // Multi-source pass.
  {
    MinHeap heap;
    std::vector<std::uint8_t> done(out.label.size(), 0);
    for (int s = 0; s < count; ++s) {
      const int i = static_cast<int>(out.label.index(seeds[s].x, seeds[s].y));
      out.distance[i] = 0.0;
      out.label[i] = s;
      heap.push({0.0, s, i});
    }
    while (!heap.empty()) {
      const Entry e = heap.top();
      heap.pop();
      if (done[e.index] || e.dist != out.distance[e.index] || e.label != out.label[e.index]) continue;
      done[e.index] = 1;
      const int x = e.index % w;
      const int y = e.index / w;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx[k];
        const int ny = y + kDy[k];
        if (!out.label.contains(nx, ny)) continue;
        const int q = static_cast<int>(out.label.index(nx, ny));
        if (done[q]) continue;
        const double nd = e.dist + geodesic_edge_cost(edges(x, y), edges(nx, ny), nu);
        if (nd < out.distance[q] || (nd == out.distance[q] && e.label < out.label[q])) {
          out.distance[q] = nd;
          out.label[q] = e.label;
          heap.push({nd, e.label, q});
        }
      }
    }
  }

  // Per-seed truncated searches for the seed neighborhoods.
  const int wanted = std::min(n_neighbors - 1, count - 1);
  out.neighbors.assign(count, {});
  if (wanted <= 0) return out;
  std::vector<double> dist(out.label.size(), kInf);
  std::vector<std::uint8_t> done(out.label.size(), 0);
  std::vector<int> touched;
  for (int s = 0; s < count; ++s) {
    std::vector<SeedNeighbor>& list = out.neighbors[s];
    MinHeap heap;
    touched.clear();
    const int src = static_cast<int>(out.label.index(seeds[s].x, seeds[s].y));
    dist[src] = 0.0;
    touched.push_back(src);
    heap.push({0.0, 0, src});
    while (!heap.empty()) {
      const Entry e = heap.top();
      heap.pop();
      if (done[e.index] || e.dist != dist[e.index]) continue;
      // Keep popping past the n-th seed only while distances tie with it.
      if (static_cast<int>(list.size()) >= wanted && e.dist > list.back().distance) break;
      done[e.index] = 1;
      const int other = seed_at[e.index];
      if (other >= 0 && other != s) list.push_back({other, e.dist});
      const int x = e.index % w;
      const int y = e.index / w;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + kDx[k];
        const int ny = y + kDy[k];
        if (!out.label.contains(nx, ny)) continue;
        const int q = static_cast<int>(out.label.index(nx, ny));
        if (done[q]) continue;
        const double nd = e.dist + geodesic_edge_cost(edges(x, y), edges(nx, ny), nu);
        if (nd < dist[q]) {
          if (dist[q] == kInf) touched.push_back(q);
          dist[q] = nd;
          heap.push({nd, 0, q});
        }
      }
    }
    std::sort(list.begin(), list.end(), [](const SeedNeighbor& a, const SeedNeighbor& b) {
      return a.distance != b.distance ? a.distance < b.distance : a.seed < b.seed;
    });
    if (static_cast<int>(list.size()) > wanted) list.resize(wanted);
    for (int i : touched) {
      dist[i] = kInf;
      done[i] = 0;
    }
  }
  return out;
}

}  // namespace sceneflow
