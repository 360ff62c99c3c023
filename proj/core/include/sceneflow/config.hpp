#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sceneflow/edges.hpp"
#include "sceneflow/egomotion.hpp"
#include "sceneflow/interpolator.hpp"
#include "sceneflow/matcher.hpp"
#include "sceneflow/refiner.hpp"
#include "sceneflow/sgm.hpp"

namespace sceneflow {

struct MatchingConfig {
  int subscales = 3;
  int iterations = 12;
  int window_radius = 3;
  int wht_patch = 8;
  int wht_coefficients = 16;
  int leaf_size = 8;
  bool operator==(const MatchingConfig&) const = default;
};

struct FilterConfig {
  double consistency_threshold = 1.0;  // tau_c
  int min_region_size = 150;           // s_c
  double region_tolerance = 1.0;
  bool operator==(const FilterConfig&) const = default;
};

struct SgmConfig {
  int max_disparity = 128;
  int p1 = 10;
  int p2 = 120;
  double lr_tolerance = 1.0;
  double uniqueness = 0.05;
  bool operator==(const SgmConfig&) const = default;
};

struct InterpolationConfig {
  int geometry_neighbors = 160;
  int motion_neighbors = 80;
  double alpha = 2.2;
  double nu = 0.001;
  bool operator==(const InterpolationConfig&) const = default;
};

struct EgoMotionConfig {
  bool enabled = false;
  double segmentation_threshold = 0.4;  // tau_S
  double max_depth = 35.0;
  double inlier_threshold = 1.0;
  double refine_threshold = 3.0;
  int ransac_iterations = 500;
  double confidence = 0.99;
  bool operator==(const EgoMotionConfig&) const = default;
};

struct RefinementConfig {
  bool enabled = true;
  RefineParams params;
  bool operator==(const RefinementConfig&) const = default;
};

/// Every stage parameter of the pipeline.
struct PipelineConfig {
  MatchingConfig matching;
  FilterConfig filter;
  SgmConfig sgm;
  InterpolationConfig interpolation;
  RefinementConfig refinement;
  EgoMotionConfig egomotion;
  std::string edges = "baseline";  // "baseline" or "file:<path>"
  std::uint64_t seed = 0;

  /// Throws kInvalidArgument on out-of-range values.
  void validate() const;

  MatcherOptions matcher_options() const;
  SgmOptions sgm_options() const;
  InterpolationOptions interpolation_options() const;
  PoseOptions pose_options() const;
  EdgeSource edge_source() const { return EdgeSource::parse(edges); }

  bool operator==(const PipelineConfig&) const = default;
};

std::string config_to_json(const PipelineConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace sceneflow
