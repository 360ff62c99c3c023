#include "sceneflow/image.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace sceneflow {

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0) {
    throw_error(ErrorKind::kInvalidArgument, "negative image size");
  }
  if (channels != 1 && channels != 3) {
    throw_error(ErrorKind::kInvalidArgument,
                "images must have 1 or 3 channels, got " + std::to_string(channels));
  }
  samples_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<float> samples)
    : Image(width, height, channels) {
  if (samples.size() != samples_.size()) {
    throw_error(ErrorKind::kDimension,
                "sample count " + std::to_string(samples.size()) +
                    " does not match " + std::to_string(width) + "x" +
                    std::to_string(height) + "x" + std::to_string(channels));
  }
  for (float s : samples) {
    if (!std::isfinite(s)) {
      throw_error(ErrorKind::kNumerical, "image samples must be finite");
    }
  }
  samples_ = std::move(samples);
}

Image Image::from_gray(const GrayImage& gray) {
  return Image(gray.width(), gray.height(), 1, gray.data());
}

float Image::clamped(int x, int y, int c) const {
  x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
  y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
  return samples_[offset(x, y, c)];
}

GrayImage Image::to_gray() const {
  GrayImage gray(width_, height_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (channels_ == 1) {
        gray(x, y) = at(x, y);
      } else {
        gray(x, y) = 0.299f * at(x, y, 0) + 0.587f * at(x, y, 1) +
                     0.114f * at(x, y, 2);
      }
    }
  }
  return gray;
}

void StereoQuad::check_dimensions() const {
  const Image* views[] = {&right0, &left1, &right1};
  const char* names[] = {"right0", "left1", "right1"};
  for (int i = 0; i < 3; ++i) {
    if (views[i]->width() != left0.width() ||
        views[i]->height() != left0.height()) {
      throw_error(ErrorKind::kDimension,
                  std::string(names[i]) + " is " +
                      std::to_string(views[i]->width()) + "x" +
                      std::to_string(views[i]->height()) + ", expected " +
                      std::to_string(left0.width()) + "x" +
                      std::to_string(left0.height()));
    }
  }
  if (left0.empty()) throw_error(ErrorKind::kDimension, "empty input images");
}

Image mirror_horizontal(const Image& image) {
  Image out(image.width(), image.height(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        out.at(x, y, c) = image.at(image.width() - 1 - x, y, c);
      }
    }
  }
  return out;
}

}  // namespace sceneflow
