#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sceneflow/config.hpp"
#include "sceneflow/egomotion.hpp"
#include "sceneflow/filter.hpp"
#include "sceneflow/geometry.hpp"
#include "sceneflow/image.hpp"

namespace sceneflow {

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineDiagnostics {
  std::vector<StageTiming> timings;
  std::size_t pixels = 0;
  std::size_t consistent_matches = 0;
  std::size_t region_matches = 0;
  int readmitted = 0;
  int deleted_regions = 0;
  std::size_t sgm_valid = 0;
  std::size_t geometry_candidates = 0;
  std::size_t motion_seeds = 0;
  std::size_t geometry_seeds = 0;
  double motion_seed_density = 0.0;    // joint matches per pixel before sparsification
  double geometry_seed_density = 0.0;  // geometry candidates per pixel
  int plane_fallbacks = 0;
  int affine_fallbacks = 0;
  std::size_t interpolation_invalid = 0;
  bool egomotion_invoked = false;
  bool egomotion_applied = false;
  std::string egomotion_warning;
  std::optional<RigidMotion> pose;
  std::size_t pose_inliers = 0;
  std::size_t moving_pixels = 0;
  std::size_t egomotion_skipped = 0;
  bool refinement_invoked = false;
  std::vector<double> refinement_energies;
  bool refinement_aborted = false;

  std::string to_json() const;
};

struct PipelineOutput {
  SceneFlowField field;
  std::optional<MotionMask> motion_mask;
  SeedSet seeds;
  PipelineDiagnostics diagnostics;
};

/// Matching, inverse matching, consistency and region filtering, SGM
/// disparity fill, sparsification, edges, interpolation, optional ego-motion
/// and refinement, in that order.  Stage failures rethrow with the stage name
/// prefixed to the message.
PipelineOutput run_pipeline(const StereoQuad& images, const CameraRig& rig,
                            const PipelineConfig& config);

/// Plain text "f cx cy B".
CameraRig load_calibration(const std::filesystem::path& path);
void save_calibration(const std::filesystem::path& path, const CameraRig& rig);

/// Writes disp0.png, disp1.png, flow.png (KITTI encodings), disp0.pfm,
/// disp1.pfm, flow.pfm, motion_mask.png when present and diagnostics.json.
/// Files already written are removed if a later write fails.
void write_outputs(const PipelineOutput& output, const std::filesystem::path& directory);

}  // namespace sceneflow
