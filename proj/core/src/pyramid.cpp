#include "sceneflow/pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sceneflow/error.hpp"

namespace sceneflow {
namespace {

constexpr int kLanczosA = 3;

double lanczos(double x) {
  if (x == 0.0) return 1.0;
  if (std::abs(x) >= kLanczosA) return 0.0;
  const double px = std::numbers::pi * x;
  return kLanczosA * std::sin(px) * std::sin(px / kLanczosA) / (px * px);
}

struct Taps {
  int first = 0;
  double weights[2 * kLanczosA];
};

// Maps every destination sample to its source taps with normalized weights.
std::vector<Taps> make_taps(int src_size, int dst_size) {
  std::vector<Taps> taps(dst_size);
  const double scale = static_cast<double>(src_size) / dst_size;
  for (int i = 0; i < dst_size; ++i) {
    const double s = (i + 0.5) * scale - 0.5;
    const int base = static_cast<int>(std::floor(s));
    Taps& t = taps[i];
    t.first = base - kLanczosA + 1;
    double sum = 0.0;
    for (int k = 0; k < 2 * kLanczosA; ++k) {
      t.weights[k] = lanczos(s - (t.first + k));
      sum += t.weights[k];
    }
    for (double& w : t.weights) w /= sum;
  }
  return taps;
}

}  // namespace

Image area_downsample(const Image& image, int factor) {
  if (factor < 1) throw_error(ErrorKind::kInvalidArgument, "factor must be >= 1");
  if (factor == 1) return image;
  const int w = (image.width() + factor - 1) / factor;
  const int h = (image.height() + factor - 1) / factor;
  const int ch = image.channels();
  Image out(w, h, ch);
  std::vector<double> acc(ch);
  for (int by = 0; by < h; ++by) {
    for (int bx = 0; bx < w; ++bx) {
      std::fill(acc.begin(), acc.end(), 0.0);
      int count = 0;
      for (int y = by * factor; y < std::min((by + 1) * factor, image.height()); ++y) {
        for (int x = bx * factor; x < std::min((bx + 1) * factor, image.width()); ++x) {
          for (int c = 0; c < ch; ++c) acc[c] += image.at(x, y, c);
          ++count;
        }
      }
      for (int c = 0; c < ch; ++c) {
        out.at(bx, by, c) = static_cast<float>(acc[c] / count);
      }
    }
  }
  return out;
}

Image lanczos_resize(const Image& image, int width, int height) {
  const int ch = image.channels();
  const auto tx = make_taps(image.width(), width);
  const auto ty = make_taps(image.height(), height);

  std::vector<double> rows(static_cast<std::size_t>(width) * image.height() * ch);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < width; ++x) {
      const Taps& t = tx[x];
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int k = 0; k < 2 * kLanczosA; ++k) {
          s += t.weights[k] * image.clamped(t.first + k, y, c);
        }
        rows[(static_cast<std::size_t>(y) * width + x) * ch + c] = s;
      }
    }
  }

  Image out(width, height, ch);
  const int src_h = image.height();
  for (int y = 0; y < height; ++y) {
    const Taps& t = ty[y];
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < ch; ++c) {
        double s = 0.0;
        for (int k = 0; k < 2 * kLanczosA; ++k) {
          const int sy = std::clamp(t.first + k, 0, src_h - 1);
          s += t.weights[k] * rows[(static_cast<std::size_t>(sy) * width + x) * ch + c];
        }
        out.at(x, y, c) = static_cast<float>(s);
      }
    }
  }
  return out;
}

Image smooth_for_scale(const Image& image, int factor) {
  if (factor == 1) return image;
  return lanczos_resize(area_downsample(image, factor), image.width(),
                        image.height());
}

ScalePyramid build_scale_pyramid(const StereoQuad& images, int subscales) {
  if (subscales < 0) {
    throw_error(ErrorKind::kInvalidArgument,
                "subscale count must be >= 0, got " + std::to_string(subscales));
  }
  images.check_dimensions();
  ScalePyramid pyramid;
  pyramid.levels.reserve(subscales + 1);
  for (int s = 0; s <= subscales; ++s) {
    const int n = 1 << s;
    pyramid.levels.push_back({n,
                              {smooth_for_scale(images.left0, n),
                               smooth_for_scale(images.right0, n),
                               smooth_for_scale(images.left1, n),
                               smooth_for_scale(images.right1, n)}});
  }
  return pyramid;
}

}  // namespace sceneflow
