#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "sceneflow/metrics.hpp"
#include "sceneflow/pipeline.hpp"
#include "sceneflow/synth.hpp"

using namespace sceneflow;

namespace {

// Small scene and reduced effort keep the suite fast.
const SyntheticScene& scene() {
  static const SyntheticScene s = synth_scene(default_scene_spec(128, 64, 1));
  return s;
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.matching.subscales = 2;
  c.matching.iterations = 6;
  c.filter.min_region_size = 40;
  c.sgm.max_disparity = 64;
  c.seed = 3;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool same_field(const SceneFlowField& a, const SceneFlowField& b) {
  for (std::size_t i = 0; i < a.vectors.size(); ++i) {
    const SceneFlowVector& x = a.vectors[i];
    const SceneFlowVector& y = b.vectors[i];
    if (x.valid() != y.valid()) return false;
    if (x.valid() && (x.u != y.u || x.v != y.v || x.d0 != y.d0 || x.d1 != y.d1)) return false;
  }
  return true;
}

}  // namespace

TEST(Pipeline, EgoOffNeverInvokesEgoMotion) {
  const PipelineOutput out = run_pipeline(scene().images, scene().rig, small_config());
  EXPECT_FALSE(out.diagnostics.egomotion_invoked);
  EXPECT_FALSE(out.diagnostics.pose.has_value());
  EXPECT_FALSE(out.motion_mask.has_value());
  EXPECT_TRUE(out.diagnostics.refinement_invoked);
  EXPECT_EQ(out.diagnostics.pixels, 128u * 64u);
  EXPECT_GT(out.diagnostics.motion_seeds, 0u);
  EXPECT_GT(out.diagnostics.motion_seed_density, 0.0);
  EXPECT_LE(out.diagnostics.motion_seed_density, 1.0);
  for (const StageTiming& t : out.diagnostics.timings) EXPECT_NE(t.stage, "egomotion");
  const std::string json = out.diagnostics.to_json();
  EXPECT_NE(json.find("\"egomotion_invoked\": false"), std::string::npos) << json;
}

TEST(Pipeline, StagesRunInOrder) {
  PipelineConfig c = small_config();
  c.egomotion.enabled = true;
  const PipelineOutput out = run_pipeline(scene().images, scene().rig, c);
  std::vector<std::string> stages;
  for (const StageTiming& t : out.diagnostics.timings) stages.push_back(t.stage);
  const std::vector<std::string> expected{"matching", "inverse matching", "filtering", "disparity fill",
                                          "sparsification", "edges", "interpolation", "egomotion",
                                          "refinement"};
  EXPECT_EQ(stages, expected);
  EXPECT_TRUE(out.diagnostics.egomotion_invoked);
  EXPECT_TRUE(out.diagnostics.egomotion_applied) << out.diagnostics.egomotion_warning;
  EXPECT_TRUE(out.motion_mask.has_value());
}

TEST(Pipeline, ProducesAccurateFieldOnSyntheticScene) {
  const PipelineOutput out = run_pipeline(scene().images, scene().rig, small_config());
  const KittiReport r = kitti_outlier_rate(out.field, scene().ground_truth, scene().valid);
  EXPECT_LT(r.all.sf, 0.2) << r.all.sf;
}

TEST(Pipeline, RefinementToggle) {
  PipelineConfig c = small_config();
  c.refinement.enabled = false;
  const PipelineOutput out = run_pipeline(scene().images, scene().rig, c);
  EXPECT_FALSE(out.diagnostics.refinement_invoked);
  EXPECT_TRUE(out.diagnostics.refinement_energies.empty());
}

TEST(Pipeline, DeterministicOutputs) {
  const PipelineConfig c = small_config();
  const PipelineOutput a = run_pipeline(scene().images, scene().rig, c);
  const PipelineOutput b = run_pipeline(scene().images, scene().rig, c);
  EXPECT_TRUE(same_field(a.field, b.field));
  const auto dir = std::filesystem::temp_directory_path() / "sceneflow_pipeline_det";
  std::filesystem::remove_all(dir);
  write_outputs(a, dir / "a");
  write_outputs(b, dir / "b");
  // diagnostics.json carries wall-clock timings and is excluded.
  for (const char* name : {"disp0.png", "disp1.png", "flow.png", "disp0.pfm", "disp1.pfm", "flow.pfm"}) {
    const std::string x = slurp(dir / "a" / name);
    EXPECT_FALSE(x.empty()) << name;
    EXPECT_EQ(x, slurp(dir / "b" / name)) << name;
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "a" / "diagnostics.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "a" / "motion_mask.png"));
  std::filesystem::remove_all(dir);
}

TEST(Pipeline, FailedWriteRemovesPartialOutputs) {
  const auto dir = std::filesystem::temp_directory_path() / "sceneflow_pipeline_partial";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir / "diagnostics.json");
  PipelineOutput out;
  out.field = SceneFlowField(4, 3);
  EXPECT_THROW(write_outputs(out, dir), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "disp0.png"));
  EXPECT_FALSE(std::filesystem::exists(dir / "flow.pfm"));
  std::filesystem::remove_all(dir);
}

TEST(Pipeline, StageErrorsNameTheStage) {
  PipelineConfig c = small_config();
  c.edges = "file:/nonexistent/edges.png";
  try {
    run_pipeline(scene().images, scene().rig, c);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
    EXPECT_NE(std::string(e.what()).find("stage edges"), std::string::npos) << e.what();
  }
  StereoQuad bad = scene().images;
  bad.right1 = Image(10, 10, 1);
  try {
    run_pipeline(bad, scene().rig, c);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(Pipeline, CalibrationRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "sceneflow_calib.txt";
  const CameraRig rig(721.5377, 609.5593, 172.854, 0.5372);
  save_calibration(path, rig);
  const CameraRig back = load_calibration(path);
  EXPECT_EQ(back.focal(), rig.focal());
  EXPECT_EQ(back.cx(), rig.cx());
  EXPECT_EQ(back.cy(), rig.cy());
  EXPECT_EQ(back.baseline(), rig.baseline());
  {
    std::ofstream out(path);
    out << "721.5 609.5\n";
  }
  EXPECT_THROW(load_calibration(path), Error);
  std::filesystem::remove(path);
}
