#include "sceneflow/sgm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <vector>

namespace sceneflow {

Grid<std::uint32_t> census_5x5(const GrayImage& image) {
  Grid<std::uint32_t> out(image.width(), image.height(), 0);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const float c = image(x, y);
      std::uint32_t bits = 0;
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          if (dx == 0 && dy == 0) continue;
          bits = (bits << 1) | (image.clamped(x + dx, y + dy) < c ? 1u : 0u);
        }
      }
      out(x, y) = bits;
    }
  }
  return out;
}

constexpr int kCensusRadius = 2;

DisparityMap sgm_disparity(const GrayImage& left, const GrayImage& right,
                           const SgmOptions& options) {
  require_same_size(left, right, "SGM right image");
  const int w = left.width();
  const int h = left.height();
  const int nd = std::max(1, std::min(options.max_disparity, w - 1) + 1);
  const auto cl = census_5x5(left);
  const auto cr = census_5x5(right);

  const std::size_t slice = static_cast<std::size_t>(nd);
  const auto at = [&](int x, int y) {
    return (static_cast<std::size_t>(y) * w + x) * slice;
  };

  // Hamming distance of 24 census bits rescaled to 0..255.
  std::vector<std::uint16_t> cost(static_cast<std::size_t>(w) * h * slice);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint16_t* c = cost.data() + at(x, y);
      for (int d = 0; d < nd; ++d) {
        if (x - d < 0) {
          c[d] = 255;
        } else {
          const int ham = std::popcount(cl(x, y) ^ cr(x - d, y));
          c[d] = static_cast<std::uint16_t>((ham * 255 + 12) / 24);
        }
      }
    }
  }

  std::vector<std::uint16_t> sum(cost.size(), 0);
  std::vector<int> prev_row(static_cast<std::size_t>(w) * slice);
  std::vector<int> cur_row(static_cast<std::size_t>(w) * slice);
  std::vector<int> prev_min(w);
  std::vector<int> cur_min(w);
  const int dirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1},
                          {1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
  const int p1 = options.p1;
  const int p2 = options.p2;

  for (const auto& dir : dirs) {
    const int rx = dir[0];
    const int ry = dir[1];
    for (int k = 0; k < h; ++k) {
      const int y = ry >= 0 ? k : h - 1 - k;
      for (int m = 0; m < w; ++m) {
        const int x = rx >= 0 ? m : w - 1 - m;
        const int px = x - rx;
        const int py = y - ry;
        const std::uint16_t* c = cost.data() + at(x, y);
        int* l = cur_row.data() + static_cast<std::size_t>(x) * slice;
        int best = std::numeric_limits<int>::max();
        if (px < 0 || px >= w || py < 0 || py >= h) {
          for (int d = 0; d < nd; ++d) {
            l[d] = c[d];
            best = std::min(best, l[d]);
          }
        } else {
          const bool same_row = ry == 0;
          const int* lp = (same_row ? cur_row.data() : prev_row.data()) +
                          static_cast<std::size_t>(px) * slice;
          const int mp = same_row ? cur_min[px] : prev_min[px];
          for (int d = 0; d < nd; ++d) {
            int v = lp[d];
            if (d > 0) v = std::min(v, lp[d - 1] + p1);
            if (d + 1 < nd) v = std::min(v, lp[d + 1] + p1);
            v = std::min(v, mp + p2);
            l[d] = c[d] + v - mp;
            best = std::min(best, l[d]);
          }
        }
        cur_min[x] = best;
        std::uint16_t* s = sum.data() + at(x, y);
        for (int d = 0; d < nd; ++d) s[d] = static_cast<std::uint16_t>(s[d] + l[d]);
      }
      std::swap(prev_row, cur_row);
      std::swap(prev_min, cur_min);
    }
  }

  Grid<int> left_wta(w, h, 0);
  Grid<std::uint8_t> unique(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint16_t* s = sum.data() + at(x, y);
      int best = 0;
      for (int d = 1; d < nd; ++d) {
        if (s[d] < s[best]) best = d;
      }
      int second = std::numeric_limits<int>::max();
      for (int d = 0; d < nd; ++d) {
        if (std::abs(d - best) > 1) second = std::min(second, static_cast<int>(s[d]));
      }
      left_wta(x, y) = best;
      unique(x, y) = second > s[best] * (1.0 + options.uniqueness) ? 1 : 0;
    }
  }

  // Right-view winners from the same aggregated volume.
  Grid<int> right_wta(w, h, 0);
  for (int y = 0; y < h; ++y) {
    for (int xr = 0; xr < w; ++xr) {
      int best = 0;
      int best_cost = std::numeric_limits<int>::max();
      for (int d = 0; d < nd && xr + d < w; ++d) {
        const int c = sum[at(xr + d, y) + d];
        if (c < best_cost) {
          best_cost = c;
          best = d;
        }
      }
      right_wta(xr, y) = best;
    }
  }

  DisparityMap out{Grid<float>(w, h, 0.0f), Grid<std::uint8_t>(w, h, 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int d = left_wta(x, y);
      const int xr = x - d;
      // Census windows reaching past the border alias between the views.
      if (!unique(x, y) || xr < kCensusRadius || x >= w - kCensusRadius) continue;
      if (y < kCensusRadius || y >= h - kCensusRadius) continue;
      if (std::abs(d - right_wta(xr, y)) > options.lr_tolerance) continue;
      double sub = d;
      if (d > 0 && d + 1 < nd) {
        const std::uint16_t* s = sum.data() + at(x, y);
        const double cm = s[d - 1];
        const double c0 = s[d];
        const double cp = s[d + 1];
        const double denom = cm - 2.0 * c0 + cp;
        if (denom > 0.0) sub = d + 0.5 * (cm - cp) / denom;
      }
      out.disparity(x, y) = static_cast<float>(sub);
      out.valid(x, y) = 1;
    }
  }
  return out;
}

}  // namespace sceneflow
