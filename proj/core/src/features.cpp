#include "sceneflow/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "sceneflow/error.hpp"

namespace sceneflow {
namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Rows of the Walsh matrix sorted by number of sign changes.
std::vector<std::vector<int>> walsh_matrix(int n) {
  std::vector<std::vector<int>> rows(n, std::vector<int>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      rows[i][j] = (std::popcount(static_cast<unsigned>(i & j)) & 1) ? -1 : 1;
    }
  }
  auto changes = [](const std::vector<int>& r) {
    int c = 0;
    for (std::size_t k = 1; k < r.size(); ++k) c += r[k] != r[k - 1];
    return c;
  };
  std::sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) {
    return changes(a) < changes(b);
  });
  return rows;
}

}  // namespace

std::vector<std::pair<int, int>> wht_coefficient_order(int patch) {
  std::vector<std::pair<int, int>> order;
  order.reserve(static_cast<std::size_t>(patch) * patch);
  for (int total = 0; total <= 2 * (patch - 1); ++total) {
    for (int a = 0; a < patch; ++a) {
      const int b = total - a;
      if (b >= 0 && b < patch) order.emplace_back(a, b);
    }
  }
  return order;
}

WhtDescriptor wht_descriptor(const GrayImage& image, int x, int y, int patch,
                             int n_coeff, int stride) {
  if (!is_power_of_two(patch)) {
    throw_error(ErrorKind::kInvalidArgument,
                "WHT patch side must be a power of two, got " + std::to_string(patch));
  }
  if (n_coeff < 1 || n_coeff > patch * patch) {
    throw_error(ErrorKind::kInvalidArgument,
                "WHT coefficient count out of range: " + std::to_string(n_coeff));
  }
  static thread_local int cached_n = 0;
  static thread_local std::vector<std::vector<int>> walsh;
  static thread_local std::vector<std::pair<int, int>> order;
  if (cached_n != patch) {
    walsh = walsh_matrix(patch);
    order = wht_coefficient_order(patch);
    cached_n = patch;
  }

  const int half = patch / 2;
  std::vector<double> p(static_cast<std::size_t>(patch) * patch);
  for (int r = 0; r < patch; ++r) {
    for (int c = 0; c < patch; ++c) {
      p[r * patch + c] = image.clamped(x + (c - half) * stride, y + (r - half) * stride);
    }
  }
  // Column transform: t[r][b] = sum_c p[r][c] * W[b][c]
  std::vector<double> t(p.size());
  for (int r = 0; r < patch; ++r) {
    for (int b = 0; b < patch; ++b) {
      double s = 0.0;
      for (int c = 0; c < patch; ++c) s += walsh[b][c] * p[r * patch + c];
      t[r * patch + b] = s;
    }
  }
  WhtDescriptor out(n_coeff);
  for (int k = 0; k < n_coeff; ++k) {
    const auto [a, b] = order[k];
    double s = 0.0;
    for (int r = 0; r < patch; ++r) s += walsh[a][r] * t[r * patch + b];
    out[k] = static_cast<float>(s);
  }
  return out;
}

DenseSift::DenseSift(const GrayImage& image)
    : width_(image.width()),
      height_(image.height()),
      padded_w_(image.width() + 2 * kPad),
      padded_h_(image.height() + 2 * kPad) {
  const std::size_t plane = static_cast<std::size_t>(padded_w_) * padded_h_;
  std::vector<float> orient(8 * plane, 0.0f);
  for (int py = 0; py < padded_h_; ++py) {
    const int y = py - kPad;
    for (int px = 0; px < padded_w_; ++px) {
      const int x = px - kPad;
      const double gx = 0.5 * (image.clamped(x + 1, y) - image.clamped(x - 1, y));
      const double gy = 0.5 * (image.clamped(x, y + 1) - image.clamped(x, y - 1));
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double b = std::atan2(gy, gx) * 8.0 / (2.0 * std::numbers::pi);
      if (b < 0.0) b += 8.0;
      const double fl = std::floor(b);
      const double frac = b - fl;
      const int b0 = static_cast<int>(fl) % 8;
      const int b1 = (b0 + 1) % 8;
      const std::size_t at = static_cast<std::size_t>(py) * padded_w_ + px;
      orient[b0 * plane + at] += static_cast<float>(mag * (1.0 - frac));
      orient[b1 * plane + at] += static_cast<float>(mag * frac);
    }
  }

  // 4x4 box sums anchored at their top-left sample; separable and summed in a
  // fixed order so results do not depend on absolute position.
  cells_.assign(8 * plane, 0.0f);
  std::vector<float> rows(plane);
  for (int bin = 0; bin < 8; ++bin) {
    const float* o = orient.data() + bin * plane;
    for (int py = 0; py < padded_h_; ++py) {
      for (int px = 0; px + 3 < padded_w_; ++px) {
        const float* r = o + static_cast<std::size_t>(py) * padded_w_ + px;
        rows[static_cast<std::size_t>(py) * padded_w_ + px] = ((r[0] + r[1]) + r[2]) + r[3];
      }
    }
    float* c = cells_.data() + bin * plane;
    for (int py = 0; py + 3 < padded_h_; ++py) {
      for (int px = 0; px + 3 < padded_w_; ++px) {
        const std::size_t i = static_cast<std::size_t>(py) * padded_w_ + px;
        c[i] = ((rows[i] + rows[i + padded_w_]) + rows[i + 2 * padded_w_]) +
               rows[i + 3 * padded_w_];
      }
    }
  }
}

float DenseSift::cell(int bin, int px, int py) const {
  const std::size_t plane = static_cast<std::size_t>(padded_w_) * padded_h_;
  return cells_[bin * plane + static_cast<std::size_t>(py + kPad) * padded_w_ + (px + kPad)];
}

SiftDescriptor DenseSift::at(int x, int y) const {
  SiftDescriptor d{};
  double norm2 = 0.0;
  for (int cy = 0; cy < 4; ++cy) {
    for (int cx = 0; cx < 4; ++cx) {
      const int px = x - 8 + 4 * cx;
      const int py = y - 8 + 4 * cy;
      for (int bin = 0; bin < 8; ++bin) {
        const float v = cell(bin, px, py);
        d[(cy * 4 + cx) * 8 + bin] = v;
        norm2 += static_cast<double>(v) * v;
      }
    }
  }
  if (norm2 < 1e-20) {
    d.fill(0.0f);
    return d;
  }
  double inv = 1.0 / std::sqrt(norm2);
  norm2 = 0.0;
  for (float& v : d) {
    v = static_cast<float>(std::min(0.2, v * inv));
    norm2 += static_cast<double>(v) * v;
  }
  inv = 1.0 / std::sqrt(norm2);
  for (float& v : d) v = static_cast<float>(v * inv);
  return d;
}

std::array<float, 3> PcaBasis::project(const SiftDescriptor& d) const {
  std::array<float, 3> out{};
  for (int k = 0; k < 3; ++k) {
    double s = 0.0;
    for (int i = 0; i < kSiftDim; ++i) s += axes(k, i) * (d[i] - mean(i));
    out[k] = static_cast<float>(s);
  }
  return out;
}

PcaBasis fit_pca(const Eigen::Matrix<double, Eigen::Dynamic, kSiftDim>& pool) {
  PcaBasis basis;
  if (pool.rows() == 0) return basis;
  basis.mean = pool.colwise().mean().transpose();
  const Eigen::Matrix<double, Eigen::Dynamic, kSiftDim> centered =
      pool.rowwise() - basis.mean.transpose();
  const Eigen::Matrix<double, kSiftDim, kSiftDim> cov =
      (centered.transpose() * centered) / static_cast<double>(pool.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kSiftDim, kSiftDim>> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw_error(ErrorKind::kNumerical, "PCA eigen-decomposition failed");
  }
  const double trace = cov.trace();
  double captured = 0.0;
  for (int k = 0; k < 3; ++k) {
    // Eigen sorts eigenvalues in increasing order.
    const int col = kSiftDim - 1 - k;
    Eigen::Matrix<double, kSiftDim, 1> axis = solver.eigenvectors().col(col);
    const double scale = axis.cwiseAbs().maxCoeff();
    for (int i = 0; i < kSiftDim; ++i) {
      if (std::abs(axis(i)) > 1e-9 * scale) {
        if (axis(i) < 0.0) axis = -axis;
        break;
      }
    }
    basis.axes.row(k) = axis.transpose();
    basis.eigenvalues[k] = std::max(0.0, solver.eigenvalues()(col));
    captured += basis.eigenvalues[k];
  }
  basis.captured_variance = trace > 0.0 ? captured / trace : 0.0;
  return basis;
}

SiftPcaFeatures sift_pca_features(const StereoQuad& images, int sample_stride,
                                  int max_pool) {
  images.check_dimensions();
  const int w = images.width();
  const int h = images.height();
  const std::array<const Image*, 4> views = {&images.left0, &images.right0,
                                             &images.left1, &images.right1};
  std::vector<DenseSift> sifts;
  sifts.reserve(4);
  for (const Image* v : views) sifts.emplace_back(v->to_gray());

  const long long pixels = static_cast<long long>(w) * h;
  long long stride = std::max(1, sample_stride);
  while (4 * ((pixels + stride - 1) / stride) > max_pool) stride *= 2;
  const long long per_image = (pixels + stride - 1) / stride;

  Eigen::Matrix<double, Eigen::Dynamic, kSiftDim> pool(4 * per_image, kSiftDim);
  long long row = 0;
  for (const DenseSift& sift : sifts) {
    for (long long i = 0; i < pixels; i += stride) {
      const SiftDescriptor d = sift.at(static_cast<int>(i % w), static_cast<int>(i / w));
      for (int k = 0; k < kSiftDim; ++k) pool(row, k) = d[k];
      ++row;
    }
  }

  SiftPcaFeatures out;
  out.basis = fit_pca(pool);
  for (int v = 0; v < 4; ++v) {
    FeatureMap map(w, h, 3);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto f = out.basis.project(sifts[v].at(x, y));
        std::copy(f.begin(), f.end(), map.at(x, y));
      }
    }
    out.maps[v] = std::move(map);
  }
  return out;
}

}  // namespace sceneflow
