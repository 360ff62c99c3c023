#pragma once

#include <filesystem>
#include <string>

#include "sceneflow/image.hpp"

namespace sceneflow {

/// Per-pixel boundary strength in [0, 1].
class EdgeMap {
 public:
  EdgeMap() = default;
  EdgeMap(int width, int height, float fill = 0.0f);
  /// Values are clamped into [0, 1]; NaN becomes 0.
  explicit EdgeMap(Grid<float> strength);

  int width() const noexcept { return strength_.width(); }
  int height() const noexcept { return strength_.height(); }
  float operator()(int x, int y) const { return strength_(x, y); }
  void set(int x, int y, float value);
  const Grid<float>& strength() const noexcept { return strength_; }

 private:
  Grid<float> strength_;
};

/// Gaussian (sigma = 1) smoothed gradient magnitude of the grayscale image,
/// divided by its 99th percentile and clamped to [0, 1].
EdgeMap detect_edges(const Image& image);

/// Reads a 16-bit single-channel PNG (strength = value / 65535) and checks
/// its dimensions.
EdgeMap load_edges(const std::filesystem::path& path, int expected_width,
                   int expected_height);

void save_edges(const std::filesystem::path& path, const EdgeMap& edges);

/// Pluggable boundary source: the built-in detector or an external map.
struct EdgeSource {
  enum class Kind { kBaseline, kFile };
  Kind kind = Kind::kBaseline;
  std::filesystem::path path;

  /// Parses "baseline" or "file:<path>".
  static EdgeSource parse(const std::string& text);
  std::string to_string() const;

  EdgeMap provide(const Image& reference) const;
};

}  // namespace sceneflow
