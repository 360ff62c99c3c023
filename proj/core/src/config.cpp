#include "sceneflow/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sceneflow/error.hpp"

namespace sceneflow {
namespace {

using nlohmann::json;

// Reads `key` into `value` when present and records it as known.
class Reader {
 public:
  Reader(const json& object, std::string section) : object_(object), section_(std::move(section)) {
    if (!object_.is_object()) {
      throw_error(ErrorKind::kInvalidArgument, "config: " + section_ + " must be an object");
    }
  }
  template <typename T>
  Reader& get(const char* key, T& value) {
    known_.insert(key);
    if (object_.contains(key)) value = object_.at(key).get<T>();
    return *this;
  }
  const json* child(const char* key) {
    known_.insert(key);
    return object_.contains(key) ? &object_.at(key) : nullptr;
  }
  void finish() const {
    for (const auto& item : object_.items()) {
      if (!known_.count(item.key())) {
        throw_error(ErrorKind::kInvalidArgument, "config: unknown key '" + item.key() + "' in " + section_);
      }
    }
  }

 private:
  const json& object_;
  std::string section_;
  std::set<std::string> known_;
};

void require(bool ok, const char* what) {
  if (!ok) throw_error(ErrorKind::kInvalidArgument, std::string("config: ") + what);
}

}  // namespace

void PipelineConfig::validate() const {
  require(matching.subscales >= 0, "matching.subscales must be >= 0");
  require(matching.iterations >= 0, "matching.iterations must be >= 0");
  require(matching.window_radius >= 0, "matching.window_radius must be >= 0");
  require(matching.wht_patch > 0 && (matching.wht_patch & (matching.wht_patch - 1)) == 0,
          "matching.wht_patch must be a power of two");
  require(matching.wht_coefficients > 0 && matching.wht_coefficients <= matching.wht_patch * matching.wht_patch,
          "matching.wht_coefficients out of range");
  require(matching.leaf_size > 0, "matching.leaf_size must be positive");
  require(filter.consistency_threshold >= 0.0, "filter.consistency_threshold must be >= 0");
  require(filter.min_region_size >= 0, "filter.min_region_size must be >= 0");
  require(filter.region_tolerance >= 0.0, "filter.region_tolerance must be >= 0");
  require(sgm.max_disparity > 0 && sgm.p1 >= 0 && sgm.p2 >= sgm.p1, "sgm parameters out of range");
  require(sgm.lr_tolerance >= 0.0 && sgm.uniqueness >= 0.0, "sgm tolerances must be >= 0");
  require(interpolation.geometry_neighbors >= 1 && interpolation.motion_neighbors >= 1,
          "interpolation neighborhoods must be positive");
  require(interpolation.alpha >= 0.0 && interpolation.nu > 0.0, "interpolation alpha >= 0 and nu > 0 required");
  refinement.params.validate();
  require(egomotion.max_depth > 0.0 && egomotion.inlier_threshold > 0.0 &&
              egomotion.refine_threshold > 0.0 && egomotion.ransac_iterations > 0 &&
              egomotion.confidence > 0.0 && egomotion.confidence < 1.0,
          "egomotion parameters out of range");
  edge_source();
}

MatcherOptions PipelineConfig::matcher_options() const {
  MatcherOptions o;
  o.subscales = matching.subscales;
  o.iterations = matching.iterations;
  o.window_radius = matching.window_radius;
  o.wht_patch = matching.wht_patch;
  o.wht_coefficients = matching.wht_coefficients;
  o.leaf_size = matching.leaf_size;
  o.seed = seed;
  return o;
}

SgmOptions PipelineConfig::sgm_options() const {
  return {sgm.max_disparity, sgm.p1, sgm.p2, sgm.lr_tolerance, sgm.uniqueness};
}

InterpolationOptions PipelineConfig::interpolation_options() const {
  return {interpolation.geometry_neighbors, interpolation.motion_neighbors, interpolation.alpha,
          interpolation.nu};
}

PoseOptions PipelineConfig::pose_options() const {
  PoseOptions o;
  o.ransac_iterations = egomotion.ransac_iterations;
  o.confidence = egomotion.confidence;
  o.inlier_threshold = egomotion.inlier_threshold;
  o.refine_threshold = egomotion.refine_threshold;
  o.max_depth = egomotion.max_depth;
  o.seed = seed;
  return o;
}

std::string config_to_json(const PipelineConfig& c) {
  const RefineParams& r = c.refinement.params;
  json j = {
      {"matching",
       {{"subscales", c.matching.subscales},
        {"iterations", c.matching.iterations},
        {"window_radius", c.matching.window_radius},
        {"wht_patch", c.matching.wht_patch},
        {"wht_coefficients", c.matching.wht_coefficients},
        {"leaf_size", c.matching.leaf_size}}},
      {"filter",
       {{"consistency_threshold", c.filter.consistency_threshold},
        {"min_region_size", c.filter.min_region_size},
        {"region_tolerance", c.filter.region_tolerance}}},
      {"sgm",
       {{"max_disparity", c.sgm.max_disparity},
        {"p1", c.sgm.p1},
        {"p2", c.sgm.p2},
        {"lr_tolerance", c.sgm.lr_tolerance},
        {"uniqueness", c.sgm.uniqueness}}},
      {"interpolation",
       {{"geometry_neighbors", c.interpolation.geometry_neighbors},
        {"motion_neighbors", c.interpolation.motion_neighbors},
        {"alpha", c.interpolation.alpha},
        {"nu", c.interpolation.nu}}},
      {"refinement",
       {{"enabled", c.refinement.enabled},
        {"kappa", r.kappa},
        {"gamma", r.gamma},
        {"lambda", r.lambda},
        {"epsilon", r.epsilon},
        {"outer_iterations", r.outer_iterations},
        {"inner_iterations", r.inner_iterations},
        {"sor_iterations", r.sor_iterations},
        {"omega", r.omega},
        {"max_step_halvings", r.max_step_halvings}}},
      {"egomotion",
       {{"enabled", c.egomotion.enabled},
        {"segmentation_threshold", c.egomotion.segmentation_threshold},
        {"max_depth", c.egomotion.max_depth},
        {"inlier_threshold", c.egomotion.inlier_threshold},
        {"refine_threshold", c.egomotion.refine_threshold},
        {"ransac_iterations", c.egomotion.ransac_iterations},
        {"confidence", c.egomotion.confidence}}},
      {"edges", c.edges},
      {"seed", c.seed}};
  return j.dump(2);
}

PipelineConfig config_from_json(const std::string& text) {
  PipelineConfig c;
  try {
    const json j = json::parse(text);
    Reader top(j, "config");
    if (const json* m = top.child("matching")) {
      Reader(*m, "matching")
          .get("subscales", c.matching.subscales)
          .get("iterations", c.matching.iterations)
          .get("window_radius", c.matching.window_radius)
          .get("wht_patch", c.matching.wht_patch)
          .get("wht_coefficients", c.matching.wht_coefficients)
          .get("leaf_size", c.matching.leaf_size)
          .finish();
    }
    if (const json* f = top.child("filter")) {
      Reader(*f, "filter")
          .get("consistency_threshold", c.filter.consistency_threshold)
          .get("min_region_size", c.filter.min_region_size)
          .get("region_tolerance", c.filter.region_tolerance)
          .finish();
    }
    if (const json* s = top.child("sgm")) {
      Reader(*s, "sgm")
          .get("max_disparity", c.sgm.max_disparity)
          .get("p1", c.sgm.p1)
          .get("p2", c.sgm.p2)
          .get("lr_tolerance", c.sgm.lr_tolerance)
          .get("uniqueness", c.sgm.uniqueness)
          .finish();
    }
    if (const json* i = top.child("interpolation")) {
      Reader(*i, "interpolation")
          .get("geometry_neighbors", c.interpolation.geometry_neighbors)
          .get("motion_neighbors", c.interpolation.motion_neighbors)
          .get("alpha", c.interpolation.alpha)
          .get("nu", c.interpolation.nu)
          .finish();
    }
    if (const json* r = top.child("refinement")) {
      RefineParams& p = c.refinement.params;
      Reader(*r, "refinement")
          .get("enabled", c.refinement.enabled)
          .get("kappa", p.kappa)
          .get("gamma", p.gamma)
          .get("lambda", p.lambda)
          .get("epsilon", p.epsilon)
          .get("outer_iterations", p.outer_iterations)
          .get("inner_iterations", p.inner_iterations)
          .get("sor_iterations", p.sor_iterations)
          .get("omega", p.omega)
          .get("max_step_halvings", p.max_step_halvings)
          .finish();
    }
    if (const json* e = top.child("egomotion")) {
      Reader(*e, "egomotion")
          .get("enabled", c.egomotion.enabled)
          .get("segmentation_threshold", c.egomotion.segmentation_threshold)
          .get("max_depth", c.egomotion.max_depth)
          .get("inlier_threshold", c.egomotion.inlier_threshold)
          .get("refine_threshold", c.egomotion.refine_threshold)
          .get("ransac_iterations", c.egomotion.ransac_iterations)
          .get("confidence", c.egomotion.confidence)
          .finish();
    }
    top.get("edges", c.edges).get("seed", c.seed).finish();
  } catch (const json::exception& e) {
    throw_error(ErrorKind::kInvalidArgument, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorKind::kIo, path.string() + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace sceneflow
