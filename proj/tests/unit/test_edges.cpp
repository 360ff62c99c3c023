#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "sceneflow/edges.hpp"

using namespace sceneflow;

namespace {

Image noise_image(int w, int h, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(w, h, 1);
  for (float& s : img.samples()) s = u(rng);
  return img;
}

// Counter-clockwise quarter turn.
Image rot90(const Image& img) {
  Image out(img.height(), img.width(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) out.at(y, img.width() - 1 - x, c) = img.at(x, y, c);
    }
  }
  return out;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("sceneflow_test_edges_" + name);
}

}  // namespace

TEST(DetectEdges, ConstantImageHasNoEdges) {
  const EdgeMap e = detect_edges(Image(32, 24, 3, 0.4f));
  ASSERT_EQ(e.width(), 32);
  ASSERT_EQ(e.height(), 24);
  for (float v : e.strength().data()) EXPECT_EQ(v, 0.0f);
}

TEST(DetectEdges, StepPeaksAtTheBoundary) {
  Image img(40, 20, 1, 0.2f);
  for (int y = 0; y < 20; ++y) {
    for (int x = 20; x < 40; ++x) img.at(x, y) = 0.8f;
  }
  const EdgeMap e = detect_edges(img);
  for (int y = 0; y < 20; ++y) {
    EXPECT_FLOAT_EQ(e(19, y), 1.0f);
    EXPECT_FLOAT_EQ(e(20, y), 1.0f);
    EXPECT_LT(e(10, y), 1e-3f);
    EXPECT_LT(e(30, y), 1e-3f);
    for (int x = 20; x < 39; ++x) EXPECT_GE(e(x, y), e(x + 1, y));
  }
}

TEST(DetectEdges, ValuesInUnitRange) {
  const EdgeMap e = detect_edges(noise_image(50, 30, 2));
  int saturated = 0;
  for (float v : e.strength().data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
    saturated += v == 1.0f ? 1 : 0;
  }
  // Everything above the 99th percentile saturates.
  EXPECT_GE(saturated, 15);
  EXPECT_LE(saturated, 50 * 30 / 50);
}

TEST(DetectEdges, EquivariantUnderQuarterTurn) {
  const Image img = noise_image(37, 23, 4);
  const EdgeMap a = detect_edges(img);
  const EdgeMap b = detect_edges(rot90(img));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) EXPECT_NEAR(b(y, img.width() - 1 - x), a(x, y), 1e-5);
  }
}

TEST(EdgeMap, ClampsAndRejectsNan) {
  Grid<float> g(3, 1);
  g(0, 0) = -0.5f;
  g(1, 0) = 2.0f;
  g(2, 0) = std::nanf("");
  const EdgeMap e(std::move(g));
  EXPECT_EQ(e(0, 0), 0.0f);
  EXPECT_EQ(e(1, 0), 1.0f);
  EXPECT_EQ(e(2, 0), 0.0f);
}

TEST(EdgeMap, PngRoundTrip) {
  const EdgeMap e = detect_edges(noise_image(20, 10, 5));
  const auto path = temp_file("roundtrip.png");
  save_edges(path, e);
  const EdgeMap back = load_edges(path, 20, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 20; ++x) EXPECT_NEAR(back(x, y), e(x, y), 0.5 / 65535.0 + 1e-7);
  }
  std::filesystem::remove(path);
}

TEST(EdgeMap, LoadChecksDimensions) {
  const auto path = temp_file("dims.png");
  save_edges(path, EdgeMap(8, 6, 0.5f));
  try {
    load_edges(path, 8, 7);
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
  std::filesystem::remove(path);
  try {
    load_edges(temp_file("missing.png"), 8, 6);
    FAIL() << "expected an I/O error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

TEST(EdgeSource, ParsesBothForms) {
  EXPECT_EQ(EdgeSource::parse("baseline").kind, EdgeSource::Kind::kBaseline);
  const EdgeSource f = EdgeSource::parse("file:/tmp/x.png");
  EXPECT_EQ(f.kind, EdgeSource::Kind::kFile);
  EXPECT_EQ(f.path, "/tmp/x.png");
  EXPECT_EQ(f.to_string(), "file:/tmp/x.png");
  EXPECT_THROW(EdgeSource::parse("file:"), Error);
  EXPECT_THROW(EdgeSource::parse("sobel"), Error);
}

TEST(EdgeSource, FileSourceIsUsedVerbatim) {
  const auto path = temp_file("source.png");
  EdgeMap e(6, 4, 0.0f);
  e.set(2, 1, 0.75f);
  save_edges(path, e);
  const EdgeMap got = EdgeSource::parse("file:" + path.string()).provide(Image(6, 4, 3, 0.1f));
  EXPECT_NEAR(got(2, 1), 0.75f, 1e-4);
  EXPECT_EQ(got(3, 1), 0.0f);
  EXPECT_THROW(EdgeSource::parse("file:" + path.string()).provide(Image(7, 4, 3)), Error);
  std::filesystem::remove(path);
}
