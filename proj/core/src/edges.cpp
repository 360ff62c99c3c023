#include "sceneflow/edges.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sceneflow/codecs.hpp"
#include "sceneflow/error.hpp"

namespace sceneflow {
namespace {

float clamp01(float v) { return std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f); }

}  // namespace

EdgeMap::EdgeMap(int width, int height, float fill)
    : strength_(width, height, clamp01(fill)) {}

EdgeMap::EdgeMap(Grid<float> strength) : strength_(std::move(strength)) {
  for (float& v : strength_.data()) v = clamp01(v);
}

void EdgeMap::set(int x, int y, float value) { strength_(x, y) = clamp01(value); }

EdgeMap detect_edges(const Image& image) {
  const GrayImage gray = image.to_gray();
  const int w = gray.width();
  const int h = gray.height();
  if (w == 0 || h == 0) return EdgeMap(w, h);

  constexpr int kRadius = 3;
  double kernel[2 * kRadius + 1];
  double ksum = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    kernel[i + kRadius] = std::exp(-0.5 * i * i);
    ksum += kernel[i + kRadius];
  }
  for (double& k : kernel) k /= ksum;

  Grid<double> tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -kRadius; i <= kRadius; ++i) s += kernel[i + kRadius] * gray.clamped(x + i, y);
      tmp(x, y) = s;
    }
  }
  Grid<double> smooth(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -kRadius; i <= kRadius; ++i) s += kernel[i + kRadius] * tmp.clamped(x, y + i);
      smooth(x, y) = s;
    }
  }

  Grid<double> mag(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (smooth.clamped(x + 1, y) - smooth.clamped(x - 1, y));
      const double gy = 0.5 * (smooth.clamped(x, y + 1) - smooth.clamped(x, y - 1));
      mag(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }

  std::vector<double> sorted = mag.data();
  const std::size_t k = static_cast<std::size_t>(0.99 * static_cast<double>(sorted.size() - 1));
  std::nth_element(sorted.begin(), sorted.begin() + k, sorted.end());
  double norm = sorted[k];
  if (!(norm > 1e-12)) norm = *std::max_element(mag.data().begin(), mag.data().end());

  Grid<float> out(w, h, 0.0f);
  if (norm > 1e-12) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = static_cast<float>(std::min(1.0, mag[i] / norm));
    }
  }
  return EdgeMap(std::move(out));
}

EdgeMap load_edges(const std::filesystem::path& path, int expected_width,
                   int expected_height) {
  const RawImage16 raw = read_png16(path);
  if (raw.channels != 1) {
    throw_error(ErrorKind::kIo, path.string() + ": edge map must be single-channel");
  }
  if (raw.width != expected_width || raw.height != expected_height) {
    throw_error(ErrorKind::kDimension,
                path.string() + ": edge map is " + std::to_string(raw.width) + "x" +
                    std::to_string(raw.height) + ", expected " +
                    std::to_string(expected_width) + "x" + std::to_string(expected_height));
  }
  Grid<float> strength(raw.width, raw.height);
  for (std::size_t i = 0; i < strength.size(); ++i) {
    strength[i] = static_cast<float>(raw.samples[i] / 65535.0);
  }
  return EdgeMap(std::move(strength));
}

void save_edges(const std::filesystem::path& path, const EdgeMap& edges) {
  RawImage16 raw{edges.width(), edges.height(), 1, {}};
  raw.samples.resize(edges.strength().size());
  for (std::size_t i = 0; i < raw.samples.size(); ++i) {
    raw.samples[i] = static_cast<std::uint16_t>(std::lround(edges.strength()[i] * 65535.0));
  }
  write_png16(path, raw);
}

EdgeSource EdgeSource::parse(const std::string& text) {
  if (text == "baseline") return {};
  if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    return {Kind::kFile, text.substr(5)};
  }
  throw_error(ErrorKind::kInvalidArgument,
              "edge source must be 'baseline' or 'file:<path>', got '" + text + "'");
}

std::string EdgeSource::to_string() const {
  return kind == Kind::kBaseline ? "baseline" : "file:" + path.string();
}

EdgeMap EdgeSource::provide(const Image& reference) const {
  if (kind == Kind::kBaseline) return detect_edges(reference);
  return load_edges(path, reference.width(), reference.height());
}

}  // namespace sceneflow
