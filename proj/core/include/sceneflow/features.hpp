#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "sceneflow/image.hpp"

namespace sceneflow {

/// Dense multi-channel feature image, interleaved per pixel.
struct FeatureMap {
  int width = 0;
  int height = 0;
  int dim = 0;
  std::vector<float> values;

  FeatureMap() = default;
  FeatureMap(int w, int h, int d)
      : width(w), height(h), dim(d),
        values(static_cast<std::size_t>(w) * h * d, 0.0f) {}

  float* at(int x, int y) {
    return values.data() + (static_cast<std::size_t>(y) * width + x) * dim;
  }
  const float* at(int x, int y) const {
    return values.data() + (static_cast<std::size_t>(y) * width + x) * dim;
  }
  const float* clamped(int x, int y) const {
    x = x < 0 ? 0 : (x >= width ? width - 1 : x);
    y = y < 0 ? 0 : (y >= height ? height - 1 : y);
    return at(x, y);
  }
};

// --- Walsh-Hadamard patch descriptors -------------------------------------

using WhtDescriptor = std::vector<float>;

/// 2D coefficient indices (row sequency, column sequency) in the order used
/// by wht_descriptor: increasing total sequency, then increasing row index.
std::vector<std::pair<int, int>> wht_coefficient_order(int patch);

/// First `n_coeff` sequency-ordered coefficients of the unnormalized 2D
/// Walsh-Hadamard transform of the `patch` x `patch` window whose top-left
/// sample is at (x - patch/2, y - patch/2) * stride.  Samples outside the
/// image replicate the border.
WhtDescriptor wht_descriptor(const GrayImage& image, int x, int y, int patch,
                             int n_coeff, int stride = 1);

// --- Dense SIFT + PCA ------------------------------------------------------

inline constexpr int kSiftDim = 128;
using SiftDescriptor = std::array<float, kSiftDim>;

/// Dense SIFT-style descriptors: 4x4 cells of 4x4 pixels (16x16 support
/// centered on the pixel), 8 orientation bins with linear bin interpolation,
/// gradient-magnitude weighted, L2 normalized, clamped at 0.2 and
/// renormalized.  Construction precomputes per-bin cell sums.
class DenseSift {
 public:
  explicit DenseSift(const GrayImage& image);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  SiftDescriptor at(int x, int y) const;

 private:
  static constexpr int kPad = 8;
  float cell(int bin, int px, int py) const;

  int width_;
  int height_;
  int padded_w_;
  int padded_h_;
  std::vector<float> cells_;  // [bin][padded row][padded col] 4x4 box sums
};

struct PcaBasis {
  Eigen::Matrix<double, kSiftDim, 1> mean = Eigen::Matrix<double, kSiftDim, 1>::Zero();
  Eigen::Matrix<double, 3, kSiftDim> axes = Eigen::Matrix<double, 3, kSiftDim>::Zero();
  std::array<double, 3> eigenvalues{};
  /// Fraction of total pooled variance captured by the three axes; 0 when
  /// the pool has no variance.
  double captured_variance = 0.0;

  std::array<float, 3> project(const SiftDescriptor& d) const;
};

/// Principal axes of a descriptor pool (rows = descriptors).  Each axis is
/// signed so that its first non-zero component is positive.
PcaBasis fit_pca(const Eigen::Matrix<double, Eigen::Dynamic, kSiftDim>& pool);

struct SiftPcaFeatures {
  std::array<FeatureMap, 4> maps;  // left0, right0, left1, right1
  PcaBasis basis;
};

/// Pools descriptors of all four images (every `sample_stride`-th pixel in
/// raster order, coarsened if the pool would exceed `max_pool`), fits one
/// PCA basis and projects every pixel onto the top three axes.
SiftPcaFeatures sift_pca_features(const StereoQuad& images, int sample_stride = 4,
                                  int max_pool = 1 << 16);

}  // namespace sceneflow
