#include "sceneflow/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "sceneflow/error.hpp"

namespace sceneflow {
namespace {

using nlohmann::json;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice(std::int64_t ix, std::int64_t iy, std::uint64_t seed, int octave) {
  std::uint64_t h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(octave) + 0x51ed27));
  h = splitmix(h ^ static_cast<std::uint64_t>(ix));
  h = splitmix(h ^ static_cast<std::uint64_t>(iy) * 0x632be59bd9b4e019ULL);
  return static_cast<double>(h >> 11) / static_cast<double>(1ULL << 52) - 1.0;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double value_noise(double s, double t, std::uint64_t seed, int octave) {
  const double fs = std::floor(s);
  const double ft = std::floor(t);
  const auto is = static_cast<std::int64_t>(fs);
  const auto it = static_cast<std::int64_t>(ft);
  const double a = fade(s - fs);
  const double b = fade(t - ft);
  const double v00 = lattice(is, it, seed, octave);
  const double v10 = lattice(is + 1, it, seed, octave);
  const double v01 = lattice(is, it + 1, seed, octave);
  const double v11 = lattice(is + 1, it + 1, seed, octave);
  return (v00 * (1 - a) + v10 * a) * (1 - b) + (v01 * (1 - a) + v11 * a) * b;
}

double texture(const TextureSpec& tex, double s, double t) {
  double sum = 0.0;
  double norm = 0.0;
  double amp = 1.0;
  double cell = tex.cell;
  for (int o = 0; o < tex.octaves; ++o) {
    sum += amp * value_noise(s / cell, t / cell, tex.seed, o);
    norm += amp;
    amp *= 0.75;
    cell *= 0.5;
  }
  return std::clamp(tex.mean + 0.5 * tex.contrast * sum / norm * 1.6, 0.0, 1.0);
}

struct PlaneInView {
  Eigen::Vector3d origin, normal, axis_s, axis_t;
  const PlaneSpec* spec;
};

PlaneInView transform_plane(const PlaneSpec& p, const Eigen::Matrix3d& R, const Eigen::Vector3d& t) {
  const Eigen::Vector3d n = p.normal.normalized();
  const Eigen::Vector3d s = (p.axis_s - p.axis_s.dot(n) * n).normalized();
  const Eigen::Vector3d tt = n.cross(s);
  return {R * p.origin + t, R * n, R * s, R * tt, &p};
}

// Nearest hit along the pixel ray; depth is the camera z of the hit.
struct Hit {
  double depth = std::numeric_limits<double>::infinity();
  int plane = -1;
  double s = 0.0, t = 0.0;
};

Hit cast(const std::vector<PlaneInView>& planes, const Eigen::Vector3d& dir) {
  Hit best;
  for (std::size_t k = 0; k < planes.size(); ++k) {
    const PlaneInView& p = planes[k];
    const double denom = p.normal.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double lambda = p.normal.dot(p.origin) / denom;
    if (!(lambda > 1e-9) || lambda >= best.depth) continue;
    const Eigen::Vector3d local = lambda * dir - p.origin;
    const double s = p.axis_s.dot(local);
    const double t = p.axis_t.dot(local);
    if (p.spec->extent) {
      const auto& e = *p.spec->extent;
      if (s < e[0] || s > e[1] || t < e[2] || t > e[3]) continue;
    }
    best = {lambda, static_cast<int>(k), s, t};
  }
  return best;
}

Eigen::Vector3d vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw_error(ErrorKind::kInvalidArgument, "scene spec: expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

RigidMotion motion_from(const json& j) {
  RigidMotion m;
  if (j.contains("rotation")) m.R = rotation_from_vector(vec3(j.at("rotation")));
  if (j.contains("translation")) m.t = vec3(j.at("translation"));
  return m;
}

json motion_to_json(const RigidMotion& m) {
  const Eigen::AngleAxisd aa(m.R);
  return {{"rotation", to_json(aa.axis() * aa.angle())}, {"translation", to_json(m.t)}};
}

}  // namespace

SceneSpec parse_scene_spec(const std::string& json_text) {
  SceneSpec spec;
  try {
    const json j = json::parse(json_text);
    spec.width = j.value("width", spec.width);
    spec.height = j.value("height", spec.height);
    if (j.contains("camera")) {
      const json& c = j.at("camera");
      spec.focal = c.value("f", spec.focal);
      spec.cx = c.value("cx", spec.cx);
      spec.cy = c.value("cy", spec.cy);
      spec.baseline = c.value("baseline", spec.baseline);
    }
    if (j.contains("camera_motion")) spec.camera_motion = motion_from(j.at("camera_motion"));
    spec.noise = j.value("noise", spec.noise);
    spec.supersampling = j.value("supersampling", spec.supersampling);
    spec.seed = j.value("seed", spec.seed);
    for (const json& p : j.at("planes")) {
      PlaneSpec plane;
      plane.origin = vec3(p.at("origin"));
      plane.normal = vec3(p.at("normal"));
      if (p.contains("axis_s")) plane.axis_s = vec3(p.at("axis_s"));
      if (p.contains("extent")) {
        const auto e = p.at("extent").get<std::vector<double>>();
        if (e.size() != 4) throw_error(ErrorKind::kInvalidArgument, "scene spec: extent needs 4 values");
        plane.extent = std::array<double, 4>{e[0], e[1], e[2], e[3]};
      }
      if (p.contains("motion")) plane.motion = motion_from(p.at("motion"));
      if (p.contains("texture")) {
        const json& t = p.at("texture");
        plane.texture.cell = t.value("cell", plane.texture.cell);
        plane.texture.octaves = t.value("octaves", plane.texture.octaves);
        plane.texture.mean = t.value("mean", plane.texture.mean);
        plane.texture.contrast = t.value("contrast", plane.texture.contrast);
        plane.texture.seed = t.value("seed", plane.texture.seed);
      }
      spec.planes.push_back(plane);
    }
  } catch (const json::exception& e) {
    throw_error(ErrorKind::kInvalidArgument, std::string("scene spec: ") + e.what());
  }
  return spec;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorKind::kIo, path.string() + ": cannot open scene spec");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_spec(ss.str());
}

std::string scene_spec_to_json(const SceneSpec& spec) {
  json j;
  j["width"] = spec.width;
  j["height"] = spec.height;
  j["camera"] = {{"f", spec.focal}, {"cx", spec.cx}, {"cy", spec.cy}, {"baseline", spec.baseline}};
  j["camera_motion"] = motion_to_json(spec.camera_motion);
  j["noise"] = spec.noise;
  j["supersampling"] = spec.supersampling;
  j["seed"] = spec.seed;
  j["planes"] = json::array();
  for (const PlaneSpec& p : spec.planes) {
    json pj = {{"origin", to_json(p.origin)},
               {"normal", to_json(p.normal)},
               {"axis_s", to_json(p.axis_s)},
               {"motion", motion_to_json(p.motion)},
               {"texture",
                {{"cell", p.texture.cell},
                 {"octaves", p.texture.octaves},
                 {"mean", p.texture.mean},
                 {"contrast", p.texture.contrast},
                 {"seed", p.texture.seed}}}};
    if (p.extent) pj["extent"] = std::vector<double>(p.extent->begin(), p.extent->end());
    j["planes"].push_back(pj);
  }
  return j.dump(2);
}

SyntheticScene synth_scene(const SceneSpec& spec) {
  if (spec.width < 1 || spec.height < 1) throw_error(ErrorKind::kInvalidArgument, "scene spec: empty image");
  if (spec.planes.empty()) throw_error(ErrorKind::kInvalidArgument, "scene spec: no planes");
  if (spec.supersampling < 1) throw_error(ErrorKind::kInvalidArgument, "scene spec: supersampling must be positive");
  if (!(spec.noise >= 0.0)) throw_error(ErrorKind::kInvalidArgument, "scene spec: negative noise");
  for (const PlaneSpec& p : spec.planes) {
    if (p.normal.norm() < 1e-12 || (p.axis_s - p.axis_s.dot(p.normal.normalized()) * p.normal.normalized()).norm() < 1e-12) {
      throw_error(ErrorKind::kInvalidArgument, "scene spec: degenerate plane axes");
    }
    if (p.texture.octaves < 1 || !(p.texture.cell > 0.0)) {
      throw_error(ErrorKind::kInvalidArgument, "scene spec: invalid texture");
    }
  }
  SyntheticScene scene{{}, {}, {}, {}, spec.camera_motion, spec.rig()};
  const CameraRig& rig = scene.rig;
  const Eigen::Vector3d right_offset(-spec.baseline, 0.0, 0.0);

  auto planes_at = [&](bool t1, bool right) {
    std::vector<PlaneInView> out;
    for (const PlaneSpec& p : spec.planes) {
      Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
      Eigen::Vector3d t = Eigen::Vector3d::Zero();
      if (t1) {
        R = spec.camera_motion.R * p.motion.R;
        t = spec.camera_motion.R * p.motion.t + spec.camera_motion.t;
      }
      if (right) t += right_offset;
      out.push_back(transform_plane(p, R, t));
    }
    return out;
  };
  auto dir_of = [&](double x, double y) {
    return Eigen::Vector3d((x - rig.cx()) / rig.focal(), (y - rig.cy()) / rig.focal(), 1.0);
  };

  const int ss = spec.supersampling;
  auto render = [&](bool t1, bool right, const char* name) {
    const std::vector<PlaneInView> planes = planes_at(t1, right);
    Image img(spec.width, spec.height, 1);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        double sum = 0.0;
        for (int sy = 0; sy < ss; ++sy) {
          for (int sx = 0; sx < ss; ++sx) {
            const double px = x + (sx + 0.5) / ss - 0.5;
            const double py = y + (sy + 0.5) / ss - 0.5;
            const Hit h = cast(planes, dir_of(px, py));
            if (h.plane < 0) {
              throw_error(ErrorKind::kInvalidArgument,
                          std::string("scene spec: planes do not cover ") + name + " at (" +
                              std::to_string(x) + ", " + std::to_string(y) + ")");
            }
            sum += texture(planes[h.plane].spec->texture, h.s, h.t);
          }
        }
        img.at(x, y) = static_cast<float>(sum / (ss * ss));
      }
    }
    return img;
  };
  scene.images.left0 = render(false, false, "left0");
  scene.images.right0 = render(false, true, "right0");
  scene.images.left1 = render(true, false, "left1");
  scene.images.right1 = render(true, true, "right1");

  if (spec.noise > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, spec.noise);
    for (Image* img : {&scene.images.left0, &scene.images.right0, &scene.images.left1, &scene.images.right1}) {
      for (float& s : img->samples()) s = static_cast<float>(std::clamp(s + gauss(rng), 0.0, 1.0));
    }
  }

  scene.ground_truth = SceneFlowField(spec.width, spec.height);
  scene.valid = Grid<std::uint8_t>(spec.width, spec.height);
  scene.moving = Grid<std::uint8_t>(spec.width, spec.height);
  const std::vector<PlaneInView> planes0 = planes_at(false, false);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const Eigen::Vector3d dir = dir_of(x, y);
      const Hit h = cast(planes0, dir);
      if (h.plane < 0) {
        throw_error(ErrorKind::kInvalidArgument, "scene spec: planes do not cover the reference view");
      }
      const PlaneSpec& p = spec.planes[h.plane];
      const bool moves = !p.motion.R.isIdentity(0.0) || !p.motion.t.isZero(0.0);
      scene.moving(x, y) = moves ? 1 : 0;
      const Eigen::Vector3d x0 = h.depth * dir;
      const Eigen::Vector3d x1 = spec.camera_motion.apply(p.motion.apply(x0));
      if (!(x1.z() > 0.0)) continue;
      const double d0 = rig.disparity_from_depth(x0.z());
      const double d1 = rig.disparity_from_depth(x1.z());
      const double u = rig.focal() * x1.x() / x1.z() + rig.cx() - x;
      const double v = rig.focal() * x1.y() / x1.z() + rig.cy() - y;
      scene.ground_truth.vectors(x, y) = {u, v, d0, d1};
      scene.valid(x, y) = 1;
    }
  }
  return scene;
}

SceneSpec default_scene_spec(int width, int height, std::uint64_t seed) {
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.focal = 300.0 * width / 256.0;
  spec.cx = (width - 1) / 2.0;
  spec.cy = (height - 1) / 2.0;
  spec.baseline = 0.5;
  spec.noise = 0.005;
  spec.seed = seed;
  spec.camera_motion.R = rotation_from_vector(Eigen::Vector3d(0.0, 0.5 * std::numbers::pi / 180.0, 0.0));
  spec.camera_motion.t = Eigen::Vector3d(0.02, 0.0, -0.4);

  PlaneSpec wall;  // slanted background
  wall.origin = Eigen::Vector3d(0.0, 0.0, 22.0);
  wall.normal = Eigen::Vector3d(0.25, 0.0, -1.0);
  wall.axis_s = Eigen::Vector3d(1.0, 0.0, 0.25);
  wall.texture = {1.2, 5, 0.35, 0.4, seed * 7 + 1};

  PlaneSpec ledge;  // nearer backdrop covering the lower part of the view
  ledge.origin = Eigen::Vector3d(0.0, 0.5, 14.0);
  ledge.normal = Eigen::Vector3d(-0.3, 0.0, -1.0);
  ledge.axis_s = Eigen::Vector3d(1.0, 0.0, -0.3);
  ledge.extent = std::array<double, 4>{-100.0, 100.0, -100.0, 0.0};
  ledge.texture = {0.5, 5, 0.5, 0.4, seed * 7 + 2};

  PlaneSpec box;  // independently moving object
  box.origin = Eigen::Vector3d(-1.2, -0.3, 9.0);
  box.normal = Eigen::Vector3d(0.1, 0.0, -1.0);
  box.axis_s = Eigen::Vector3d(1.0, 0.0, 0.1);
  box.extent = std::array<double, 4>{-1.0, 1.0, -1.0, 1.0};
  box.motion.R = rotation_from_vector(Eigen::Vector3d(0.0, 1.0 * std::numbers::pi / 180.0, 0.0));
  box.motion.t = Eigen::Vector3d(0.25, 0.0, -0.2);
  box.texture = {0.4, 4, 0.75, 0.4, seed * 7 + 3};

  spec.planes = {wall, ledge, box};
  return spec;
}

}  // namespace sceneflow
