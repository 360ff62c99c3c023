#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sceneflow/geometry.hpp"
#include "sceneflow/image.hpp"

namespace sceneflow {

/// Raw PNG samples widened to 16 bits.  `bit_depth` records the stored depth
/// (8 or 16); 8-bit values are kept in 0..255.
struct RawImage16 {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 or 3
  std::vector<std::uint16_t> samples;
  int bit_depth = 16;
};

/// Reads any PNG as gray or RGB (palette expanded, alpha dropped).
RawImage16 read_png16(const std::filesystem::path& path);
/// Writes a 16-bit gray or RGB PNG.
void write_png16(const std::filesystem::path& path, const RawImage16& image);
/// Writes an 8-bit PNG from an image with samples in [0, 1].
void write_png8(const std::filesystem::path& path, const Image& image);

/// Loads a PNG as an Image normalized to [0, 1].
Image load_image(const std::filesystem::path& path);
/// Stores an image as 16-bit PNG.
void save_image16(const std::filesystem::path& path, const Image& image);

// --- KITTI interchange formats -------------------------------------------

/// Disparity map; NaN (or any non-positive value) marks invalid pixels.
using DisparityGrid = Grid<double>;

struct FlowMap {
  Grid<double> u;
  Grid<double> v;
  Grid<std::uint8_t> valid;

  FlowMap() = default;
  FlowMap(int w, int h) : u(w, h, 0.0), v(w, h, 0.0), valid(w, h, 0) {}
  int width() const noexcept { return u.width(); }
  int height() const noexcept { return u.height(); }
};

/// 16-bit PNG, stored = round(d * 256), 0 = invalid.
void write_disparity_png(const std::filesystem::path& path, const DisparityGrid& disparity);
DisparityGrid read_disparity_png(const std::filesystem::path& path);

/// 3-channel 16-bit PNG: R = u * 64 + 2^15, G = v * 64 + 2^15, B = validity.
void write_flow_png(const std::filesystem::path& path, const FlowMap& flow);
FlowMap read_flow_png(const std::filesystem::path& path);

/// Little-endian PFM with rows stored bottom-up; 1 or 3 channels.
struct PfmImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> samples;  // top-down, interleaved
};
void write_pfm(const std::filesystem::path& path, const PfmImage& image);
PfmImage read_pfm(const std::filesystem::path& path);

// --- field conversions ------------------------------------------------------

DisparityGrid disparity0_of(const SceneFlowField& field);
DisparityGrid disparity1_of(const SceneFlowField& field);
FlowMap flow_of(const SceneFlowField& field);

/// Reassembles a field from KITTI maps; pixels invalid in any map become the
/// invalid sentinel.
SceneFlowField field_from_maps(const DisparityGrid& d0, const DisparityGrid& d1,
                               const FlowMap& flow);

// --- visualization ----------------------------------------------------------

/// Middlebury color wheel; `max_radius` <= 0 normalizes by the largest valid
/// flow magnitude.  Invalid pixels are black.
Image render_flow(const FlowMap& flow, double max_radius = 0.0);
/// Jet-style color map over [0, max_disparity]; invalid pixels are black.
Image render_disparity(const DisparityGrid& disparity, double max_disparity = 0.0);

}  // namespace sceneflow
