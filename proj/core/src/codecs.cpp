#include "sceneflow/codecs.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "sceneflow/error.hpp"

namespace sceneflow {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct File {
  std::FILE* fp = nullptr;
  File(const std::filesystem::path& path, const char* mode)
      : fp(std::fopen(path.c_str(), mode)) {}
  ~File() {
    if (fp) std::fclose(fp);
  }
  File(const File&) = delete;
  File& operator=(const File&) = delete;
};

[[noreturn]] void io_error(const std::filesystem::path& path, const std::string& what) {
  throw_error(ErrorKind::kIo, path.string() + ": " + what);
}

}  // namespace

RawImage16 read_png16(const std::filesystem::path& path) {
  File file(path, "rb");
  if (!file.fp) io_error(path, "cannot open for reading");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    io_error(path, "not a PNG file");
  }

  RawImage16 out;
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    io_error(path, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    io_error(path, "malformed PNG data");
  }
  png_init_io(png, file.fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  out.channels = channels >= 3 ? 3 : 1;
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.samples.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
  const int stride = channels;  // samples per pixel after transforms
  std::size_t k = 0;
  for (int y = 0; y < out.height; ++y) {
    const unsigned char* row = rows[y];
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < out.channels; ++c) {
        const std::size_t idx = static_cast<std::size_t>(x) * stride + c;
        if (out.bit_depth == 16) {
          std::uint16_t v;
          std::memcpy(&v, row + 2 * idx, 2);
          out.samples[k++] = v;
        } else {
          out.samples[k++] = row[idx];
        }
      }
    }
  }
  return out;
}

namespace {

void write_png(const std::filesystem::path& path, int width, int height,
               int channels, int depth, const std::vector<unsigned char>& bytes) {
  File file(path, "wb");
  if (!file.fp) io_error(path, "cannot open for writing");
  std::vector<png_const_bytep> rows(height);
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * (depth / 8);
  for (int y = 0; y < height; ++y) rows[y] = bytes.data() + rowbytes * y;

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    io_error(path, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    io_error(path, "PNG encoding failed");
  }
  png_init_io(png, file.fp);
  png_set_IHDR(png, info, width, height, depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_rows(png, const_cast<png_bytepp>(rows.data()), height);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png16(const std::filesystem::path& path, const RawImage16& image) {
  if (image.channels != 1 && image.channels != 3) {
    io_error(path, "PNG output needs 1 or 3 channels");
  }
  std::vector<unsigned char> bytes(image.samples.size() * 2);
  for (std::size_t i = 0; i < image.samples.size(); ++i) {
    bytes[2 * i] = static_cast<unsigned char>(image.samples[i] >> 8);  // big-endian
    bytes[2 * i + 1] = static_cast<unsigned char>(image.samples[i] & 0xff);
  }
  write_png(path, image.width, image.height, image.channels, 16, bytes);
}

void write_png8(const std::filesystem::path& path, const Image& image) {
  std::vector<unsigned char> bytes(image.samples().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = std::clamp(static_cast<double>(image.samples()[i]), 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  write_png(path, image.width(), image.height(), image.channels(), 8, bytes);
}

Image load_image(const std::filesystem::path& path) {
  const RawImage16 raw = read_png16(path);
  const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<float> samples(raw.samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] = static_cast<float>(raw.samples[i] / scale);
  }
  return Image(raw.width, raw.height, raw.channels, std::move(samples));
}

void save_image16(const std::filesystem::path& path, const Image& image) {
  RawImage16 raw{image.width(), image.height(), image.channels(), {}, 16};
  raw.samples.resize(image.samples().size());
  for (std::size_t i = 0; i < raw.samples.size(); ++i) {
    const double v = std::clamp(static_cast<double>(image.samples()[i]), 0.0, 1.0);
    raw.samples[i] = static_cast<std::uint16_t>(std::lround(v * 65535.0));
  }
  write_png16(path, raw);
}

void write_disparity_png(const std::filesystem::path& path, const DisparityGrid& disparity) {
  RawImage16 raw{disparity.width(), disparity.height(), 1, {}, 16};
  raw.samples.resize(disparity.size());
  for (std::size_t i = 0; i < disparity.size(); ++i) {
    const double d = disparity[i];
    if (!(d > 0.0) || !std::isfinite(d)) {
      raw.samples[i] = 0;
      continue;
    }
    raw.samples[i] = static_cast<std::uint16_t>(std::clamp(std::lround(d * 256.0), 1L, 65535L));
  }
  write_png16(path, raw);
}

DisparityGrid read_disparity_png(const std::filesystem::path& path) {
  const RawImage16 raw = read_png16(path);
  if (raw.channels != 1 || raw.bit_depth != 16) {
    io_error(path, "disparity maps must be 16-bit single-channel PNG");
  }
  DisparityGrid out(raw.width, raw.height, kNaN);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (raw.samples[i] != 0) out[i] = raw.samples[i] / 256.0;
  }
  return out;
}

void write_flow_png(const std::filesystem::path& path, const FlowMap& flow) {
  RawImage16 raw{flow.width(), flow.height(), 3, {}, 16};
  raw.samples.assign(flow.u.size() * 3, 0);
  auto encode = [](double v) {
    return static_cast<std::uint16_t>(std::clamp(std::lround(v * 64.0 + 32768.0), 0L, 65535L));
  };
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    if (!flow.valid[i] || !std::isfinite(flow.u[i]) || !std::isfinite(flow.v[i])) continue;
    raw.samples[3 * i] = encode(flow.u[i]);
    raw.samples[3 * i + 1] = encode(flow.v[i]);
    raw.samples[3 * i + 2] = 1;
  }
  write_png16(path, raw);
}

FlowMap read_flow_png(const std::filesystem::path& path) {
  const RawImage16 raw = read_png16(path);
  if (raw.channels != 3 || raw.bit_depth != 16) {
    io_error(path, "flow maps must be 16-bit 3-channel PNG");
  }
  FlowMap out(raw.width, raw.height);
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    if (raw.samples[3 * i + 2] == 0) continue;
    out.u[i] = (raw.samples[3 * i] - 32768.0) / 64.0;
    out.v[i] = (raw.samples[3 * i + 1] - 32768.0) / 64.0;
    out.valid[i] = 1;
  }
  return out;
}

void write_pfm(const std::filesystem::path& path, const PfmImage& image) {
  if (image.channels != 1 && image.channels != 3) io_error(path, "PFM needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) io_error(path, "cannot open for writing");
  out << (image.channels == 3 ? "PF" : "Pf") << "\n"
      << image.width << " " << image.height << "\n-1.0\n";
  const std::size_t row = static_cast<std::size_t>(image.width) * image.channels;
  std::vector<unsigned char> bytes(row * 4);
  for (int y = image.height - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(image.samples[y * row + i]);
      for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) io_error(path, "write failed");
}

PfmImage read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) io_error(path, "cannot open for reading");
  std::string magic;
  PfmImage img;
  double scale = 0.0;
  in >> magic >> img.width >> img.height >> scale;
  if (!in || (magic != "PF" && magic != "Pf") || img.width <= 0 || img.height <= 0 ||
      scale == 0.0) {
    io_error(path, "malformed PFM header");
  }
  in.get();  // single whitespace before the raster
  img.channels = magic == "PF" ? 3 : 1;
  const bool little = scale < 0.0;
  const std::size_t row = static_cast<std::size_t>(img.width) * img.channels;
  img.samples.resize(row * img.height);
  std::vector<unsigned char> bytes(row * 4);
  for (int y = img.height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) io_error(path, "truncated PFM raster");
    for (std::size_t i = 0; i < row; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        const int shift = little ? 8 * b : 8 * (3 - b);
        bits |= static_cast<std::uint32_t>(bytes[4 * i + b]) << shift;
      }
      img.samples[y * row + i] = std::bit_cast<float>(bits);
    }
  }
  return img;
}

DisparityGrid disparity0_of(const SceneFlowField& field) {
  DisparityGrid out(field.width(), field.height(), kNaN);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (field.vectors[i].valid()) out[i] = field.vectors[i].d0;
  }
  return out;
}

DisparityGrid disparity1_of(const SceneFlowField& field) {
  DisparityGrid out(field.width(), field.height(), kNaN);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (field.vectors[i].valid()) out[i] = field.vectors[i].d1;
  }
  return out;
}

FlowMap flow_of(const SceneFlowField& field) {
  FlowMap out(field.width(), field.height());
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    const SceneFlowVector& v = field.vectors[i];
    if (!v.valid()) continue;
    out.u[i] = v.u;
    out.v[i] = v.v;
    out.valid[i] = 1;
  }
  return out;
}

SceneFlowField field_from_maps(const DisparityGrid& d0, const DisparityGrid& d1,
                               const FlowMap& flow) {
  require_same_size(d0, d1, "disparity map at t1");
  require_same_size(d0, flow.u, "flow map");
  SceneFlowField field(d0.width(), d0.height());
  for (std::size_t i = 0; i < d0.size(); ++i) {
    if (!(d0[i] > 0.0) || !(d1[i] > 0.0) || !flow.valid[i]) continue;
    field.vectors[i] = {flow.u[i], flow.v[i], d0[i], d1[i]};
  }
  return field;
}

namespace {

// Middlebury color wheel.
std::vector<std::array<double, 3>> make_color_wheel() {
  const int ry = 15, yg = 6, gc = 4, cb = 11, bm = 13, mr = 6;
  std::vector<std::array<double, 3>> wheel;
  for (int i = 0; i < ry; ++i) wheel.push_back({255, 255.0 * i / ry, 0});
  for (int i = 0; i < yg; ++i) wheel.push_back({255 - 255.0 * i / yg, 255, 0});
  for (int i = 0; i < gc; ++i) wheel.push_back({0, 255, 255.0 * i / gc});
  for (int i = 0; i < cb; ++i) wheel.push_back({0, 255 - 255.0 * i / cb, 255});
  for (int i = 0; i < bm; ++i) wheel.push_back({255.0 * i / bm, 0, 255});
  for (int i = 0; i < mr; ++i) wheel.push_back({255, 0, 255 - 255.0 * i / mr});
  return wheel;
}

}  // namespace

Image render_flow(const FlowMap& flow, double max_radius) {
  static const auto wheel = make_color_wheel();
  const int ncols = static_cast<int>(wheel.size());
  if (max_radius <= 0.0) {
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
      if (flow.valid[i]) max_radius = std::max(max_radius, std::hypot(flow.u[i], flow.v[i]));
    }
  }
  if (max_radius <= 0.0) max_radius = 1.0;
  Image out(flow.width(), flow.height(), 3);
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.valid(x, y)) continue;
      const double fu = flow.u(x, y) / max_radius;
      const double fv = flow.v(x, y) / max_radius;
      const double rad = std::min(1.0, std::hypot(fu, fv));
      const double a = std::atan2(-fv, -fu) / std::numbers::pi;
      const double fk = (a + 1.0) / 2.0 * (ncols - 1);
      const int k0 = static_cast<int>(fk);
      const int k1 = (k0 + 1) % ncols;
      const double f = fk - k0;
      for (int c = 0; c < 3; ++c) {
        const double col = ((1 - f) * wheel[k0][c] + f * wheel[k1][c]) / 255.0;
        out.at(x, y, c) = static_cast<float>(1.0 - rad * (1.0 - col));
      }
    }
  }
  return out;
}

Image render_disparity(const DisparityGrid& disparity, double max_disparity) {
  if (max_disparity <= 0.0) {
    for (double d : disparity.data()) {
      if (d > 0.0 && std::isfinite(d)) max_disparity = std::max(max_disparity, d);
    }
  }
  if (max_disparity <= 0.0) max_disparity = 1.0;
  Image out(disparity.width(), disparity.height(), 3);
  for (int y = 0; y < disparity.height(); ++y) {
    for (int x = 0; x < disparity.width(); ++x) {
      const double d = disparity(x, y);
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      const double t = std::clamp(d / max_disparity, 0.0, 1.0);
      const double r = std::clamp(1.5 - std::abs(4.0 * t - 3.0), 0.0, 1.0);
      const double g = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
      const double b = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
      out.at(x, y, 0) = static_cast<float>(r);
      out.at(x, y, 1) = static_cast<float>(g);
      out.at(x, y, 2) = static_cast<float>(b);
    }
  }
  return out;
}

}  // namespace sceneflow
