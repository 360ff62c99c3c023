#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sceneflow/egomotion.hpp"
#include "sceneflow/geometry.hpp"
#include "sceneflow/image.hpp"

namespace sceneflow {

struct TextureSpec {
  double cell = 0.5;     // coarsest lattice cell in meters
  int octaves = 4;
  double mean = 0.5;     // albedo around which the noise varies
  double contrast = 1.0;
  std::uint64_t seed = 1;
};

/// Textured plane in the t0 left camera frame.  Local texture coordinates
/// (s, t) run along `axis_s` and normal x axis_s from `origin`; an optional
/// extent bounds the plane to a rectangle in those coordinates.
struct PlaneSpec {
  Eigen::Vector3d origin = Eigen::Vector3d(0, 0, 10);
  Eigen::Vector3d normal = Eigen::Vector3d(0, 0, -1);
  Eigen::Vector3d axis_s = Eigen::Vector3d(1, 0, 0);
  std::optional<std::array<double, 4>> extent;  // s_min, s_max, t_min, t_max
  RigidMotion motion;                            // object motion in the t0 frame
  TextureSpec texture;
};

struct SceneSpec {
  int width = 256;
  int height = 128;
  double focal = 300.0;
  double cx = 127.5;
  double cy = 63.5;
  double baseline = 0.5;
  RigidMotion camera_motion;  // t0 camera frame to t1 camera frame
  double noise = 0.0;         // Gaussian sigma on [0, 1] intensities
  int supersampling = 2;      // per axis
  std::uint64_t seed = 1;
  std::vector<PlaneSpec> planes;

  CameraRig rig() const { return CameraRig(focal, cx, cy, baseline); }
};

SceneSpec parse_scene_spec(const std::string& json_text);
SceneSpec load_scene_spec(const std::filesystem::path& path);
std::string scene_spec_to_json(const SceneSpec& spec);

struct SyntheticScene {
  StereoQuad images;
  SceneFlowField ground_truth;
  Grid<std::uint8_t> valid;  // both depths positive
  Grid<std::uint8_t> moving; // surface has its own motion
  RigidMotion camera_motion;
  CameraRig rig;
};

/// Z-buffered rendering of the planes into all four views with per-plane
/// value-noise textures and analytic ground truth at left0 pixel centers.
/// Throws kInvalidArgument when any sample of any view sees no plane.
SyntheticScene synth_scene(const SceneSpec& spec);

/// Fixture used by tests and benchmarks: a slanted far wall and a nearer
/// lower backdrop, both static, and an independently moving box face in
/// front.  The camera moves forward with a slight yaw.  Each plane has its
/// own albedo so object outlines are stronger than the texture.
SceneSpec default_scene_spec(int width = 256, int height = 128, std::uint64_t seed = 1);

}  // namespace sceneflow
