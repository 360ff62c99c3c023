// Command line driver: run, synth, eval and viz subcommands.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sceneflow/codecs.hpp"
#include "sceneflow/config.hpp"
#include "sceneflow/error.hpp"
#include "sceneflow/metrics.hpp"
#include "sceneflow/pipeline.hpp"
#include "sceneflow/synth.hpp"

namespace fs = std::filesystem;
using namespace sceneflow;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return kExitUsage;
    case ErrorKind::kDimension:
    case ErrorKind::kIo: return kExitIo;
    case ErrorKind::kNumerical: return kExitNumerical;
  }
  return kExitNumerical;
}

bool parse_switch(const std::string& value, const char* flag) {
  if (value == "on") return true;
  if (value == "off") return false;
  throw Error(ErrorKind::kInvalidArgument, std::string(flag) + " expects on|off");
}

struct RunArgs {
  std::string left0, right0, left1, right1, calib, config, edges, ego, refine, out;
  std::optional<std::uint64_t> seed;
};

int cmd_run(const RunArgs& a) {
  PipelineConfig config = a.config.empty() ? PipelineConfig{} : load_config(a.config);
  if (!a.edges.empty()) config.edges = a.edges;
  if (!a.ego.empty()) config.egomotion.enabled = parse_switch(a.ego, "--ego");
  if (!a.refine.empty()) config.refinement.enabled = parse_switch(a.refine, "--refine");
  if (a.seed) config.seed = *a.seed;
  config.validate();

  StereoQuad quad{load_image(a.left0), load_image(a.right0), load_image(a.left1), load_image(a.right1)};
  quad.check_dimensions();
  const CameraRig rig = load_calibration(a.calib);
  const PipelineOutput output = run_pipeline(quad, rig, config);
  write_outputs(output, a.out);
  if (!output.diagnostics.egomotion_warning.empty()) {
    std::cerr << "warning: " << output.diagnostics.egomotion_warning << '\n';
  }
  std::cout << "wrote " << a.out << " (" << output.field.valid_count() << " valid pixels)\n";
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed) {
  SceneSpec spec = spec_path == "default" ? default_scene_spec() : load_scene_spec(spec_path);
  if (seed) spec.seed = *seed;
  const SyntheticScene scene = synth_scene(spec);
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, dir.string() + ": " + ec.message());
  save_image16(dir / "left0.png", scene.images.left0);
  save_image16(dir / "right0.png", scene.images.right0);
  save_image16(dir / "left1.png", scene.images.left1);
  save_image16(dir / "right1.png", scene.images.right1);
  save_calibration(dir / "calib.txt", scene.rig);
  SceneFlowField gt = scene.ground_truth;
  for (std::size_t i = 0; i < gt.vectors.size(); ++i) {
    if (!scene.valid[i]) gt.vectors[i] = SceneFlowVector::invalid();
  }
  write_disparity_png(dir / "disp0.png", disparity0_of(gt));
  write_disparity_png(dir / "disp1.png", disparity1_of(gt));
  write_flow_png(dir / "flow.png", flow_of(gt));
  Image mask(scene.moving.width(), scene.moving.height(), 1);
  for (std::size_t i = 0; i < scene.moving.size(); ++i) mask.samples()[i] = scene.moving[i] ? 1.0f : 0.0f;
  write_png8(dir / "motion_mask.png", mask);
  std::ofstream(dir / "spec.json") << scene_spec_to_json(spec) << '\n';
  std::cout << "wrote " << dir << '\n';
  return 0;
}

SceneFlowField read_bundle(const fs::path& dir) {
  return field_from_maps(read_disparity_png(dir / "disp0.png"), read_disparity_png(dir / "disp1.png"),
                         read_flow_png(dir / "flow.png"));
}

Grid<std::uint8_t> read_mask(const fs::path& path) {
  const RawImage16 raw = read_png16(path);
  Grid<std::uint8_t> m(raw.width, raw.height);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = raw.samples[i * raw.channels] > 0 ? 1 : 0;
  return m;
}

nlohmann::json rates_json(const OutlierRates& r) {
  return {{"D1", r.d1}, {"D2", r.d2}, {"Fl", r.fl}, {"SF", r.sf}, {"pixels", r.pixels}};
}

int cmd_eval(const std::string& est_dir, const std::string& gt_dir) {
  const SceneFlowField est = read_bundle(est_dir);
  const SceneFlowField gt = read_bundle(gt_dir);
  Grid<std::uint8_t> valid(gt.width(), gt.height());
  for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = gt.vectors[i].valid();
  std::optional<Grid<std::uint8_t>> fg;
  if (fs::exists(fs::path(gt_dir) / "motion_mask.png")) fg = read_mask(fs::path(gt_dir) / "motion_mask.png");
  const KittiReport report = kitti_outlier_rate(est, gt, valid, fg ? &*fg : nullptr);
  nlohmann::json j = {{"all", rates_json(report.all)}};
  if (report.background) j["bg"] = rates_json(*report.background);
  if (report.foreground) j["fg"] = rates_json(*report.foreground);
  if (fg && fs::exists(fs::path(est_dir) / "motion_mask.png")) {
    const PrecisionRecall pr = precision_recall(read_mask(fs::path(est_dir) / "motion_mask.png"), *fg);
    j["segmentation"] = {{"precision", pr.precision ? nlohmann::json(*pr.precision) : nlohmann::json("undefined")},
                         {"recall", pr.recall ? nlohmann::json(*pr.recall) : nlohmann::json("undefined")}};
  }
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_viz(const std::string& in, const std::string& out, double max_value) {
  const RawImage16 raw = read_png16(in);
  if (raw.bit_depth != 16) throw Error(ErrorKind::kIo, in + ": expected a 16-bit KITTI map");
  if (raw.channels == 3) {
    write_png8(out, render_flow(read_flow_png(in), max_value));
  } else {
    write_png8(out, render_disparity(read_disparity_png(in), max_value));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense scene flow from two rectified stereo pairs"};
  app.require_subcommand(1);

  RunArgs run;
  std::uint64_t run_seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Estimate scene flow");
  run_cmd->add_option("--left0", run.left0, "Left image at t0")->required();
  run_cmd->add_option("--right0", run.right0, "Right image at t0")->required();
  run_cmd->add_option("--left1", run.left1, "Left image at t1")->required();
  run_cmd->add_option("--right1", run.right1, "Right image at t1")->required();
  run_cmd->add_option("--calib", run.calib, "Calibration file 'f cx cy B'")->required();
  run_cmd->add_option("--config", run.config, "JSON pipeline configuration");
  run_cmd->add_option("--edges", run.edges, "baseline | file:<path>");
  run_cmd->add_option("--ego", run.ego, "on | off")->check(CLI::IsMember({"on", "off"}));
  run_cmd->add_option("--refine", run.refine, "on | off")->check(CLI::IsMember({"on", "off"}));
  auto* seed_opt = run_cmd->add_option("--seed", run_seed, "Random seed");
  run_cmd->add_option("--out", run.out, "Output directory")->required();

  std::string spec_path, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic scene with ground truth");
  synth_cmd->add_option("--spec", spec_path, "JSON scene spec, or 'default'")->required();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  auto* synth_seed_opt = synth_cmd->add_option("--seed", synth_seed, "Noise seed override");

  std::string est_dir, gt_dir;
  auto* eval_cmd = app.add_subcommand("eval", "KITTI outlier rates of an estimate");
  eval_cmd->add_option("--est", est_dir, "Estimate directory")->required();
  eval_cmd->add_option("--gt", gt_dir, "Ground truth directory")->required();

  std::string viz_in, viz_out;
  double viz_max = 0.0;
  auto* viz_cmd = app.add_subcommand("viz", "Render a KITTI flow or disparity PNG");
  viz_cmd->add_option("--in", viz_in, "KITTI flow or disparity PNG")->required();
  viz_cmd->add_option("--out", viz_out, "8-bit PNG output")->required();
  viz_cmd->add_option("--max", viz_max, "Saturation value (0 = automatic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run_cmd) {
      if (*seed_opt) run.seed = run_seed;
      return cmd_run(run);
    }
    if (*synth_cmd) {
      return cmd_synth(spec_path, synth_out,
                       *synth_seed_opt ? std::optional<std::uint64_t>(synth_seed) : std::nullopt);
    }
    if (*eval_cmd) return cmd_eval(est_dir, gt_dir);
    if (*viz_cmd) return cmd_viz(viz_in, viz_out, viz_max);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
