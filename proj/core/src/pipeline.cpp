#include "sceneflow/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "sceneflow/codecs.hpp"
#include "sceneflow/edges.hpp"
#include "sceneflow/error.hpp"
#include "sceneflow/interpolator.hpp"
#include "sceneflow/refiner.hpp"
#include "sceneflow/sgm.hpp"

namespace sceneflow {
namespace {

template <typename F>
auto run_stage(PipelineDiagnostics& diag, const char* name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    diag.timings.push_back({name, elapsed.count()});
  };
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      finish();
    } else {
      auto result = body();
      finish();
      return result;
    }
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage ") + name + ": " + e.what());
  } catch (const std::bad_alloc&) {
    throw Error(ErrorKind::kNumerical, std::string("stage ") + name + ": out of memory");
  }
}

// Copies the nearest valid vector (breadth-first, 4-connected) into
// invalid pixels; returns the mask of filled pixels.
Grid<std::uint8_t> fill_invalid(Grid<SceneFlowVector>& vectors) {
  Grid<std::uint8_t> filled(vectors.width(), vectors.height());
  std::deque<std::size_t> queue;
  std::vector<std::uint8_t> seen(vectors.size(), 0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].valid()) {
      seen[i] = 1;
      queue.push_back(i);
    }
  }
  const int w = vectors.width();
  const int h = vectors.height();
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    const int nx[4] = {x - 1, x + 1, x, x};
    const int ny[4] = {y, y, y - 1, y + 1};
    for (int k = 0; k < 4; ++k) {
      if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
      const std::size_t j = vectors.index(nx[k], ny[k]);
      if (seen[j]) continue;
      seen[j] = 1;
      vectors[j] = vectors[i];
      filled[j] = 1;
      queue.push_back(j);
    }
  }
  return filled;
}

SceneFlowField refine_field(const SceneFlowField& field, const StereoQuad& images,
                            const EdgeMap& edges, const RefineParams& params,
                            PipelineDiagnostics& diag) {
  Grid<SceneFlowVector> vectors = field.vectors;
  std::size_t valid = 0;
  for (const SceneFlowVector& v : vectors.data()) valid += v.valid();
  if (valid == 0) return field;
  const Grid<std::uint8_t> filled = fill_invalid(vectors);

  const int w = field.width();
  const int h = field.height();
  MotionField motion(w, h);
  Grid<double> d0(w, h);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    motion.u[i] = vectors[i].u;
    motion.v[i] = vectors[i].v;
    motion.dp[i] = vectors[i].d1 - vectors[i].d0;
    motion.frozen[i] = filled[i];
    d0[i] = vectors[i].d0;
  }
  const RefineImages gray{images.left0.to_gray(), images.left1.to_gray(), images.right1.to_gray()};
  RefineDiagnostics rd;
  const MotionField refined = refine_variational(motion, d0, gray, edges, params, &rd);
  diag.refinement_energies = rd.energies;
  diag.refinement_aborted = rd.aborted;

  SceneFlowField out = field;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (filled[i] || !field.vectors[i].valid()) continue;
    SceneFlowVector v{refined.u[i], refined.v[i], d0[i], d0[i] + refined.dp[i]};
    if (v.valid()) out.vectors[i] = v;
  }
  return out;
}

}  // namespace

std::string PipelineDiagnostics::to_json() const {
  using nlohmann::json;
  json j;
  j["timings"] = json::array();
  for (const StageTiming& t : timings) j["timings"].push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  j["pixels"] = pixels;
  j["consistent_matches"] = consistent_matches;
  j["region_matches"] = region_matches;
  j["readmitted"] = readmitted;
  j["deleted_regions"] = deleted_regions;
  j["sgm_valid"] = sgm_valid;
  j["geometry_candidates"] = geometry_candidates;
  j["motion_seeds"] = motion_seeds;
  j["geometry_seeds"] = geometry_seeds;
  j["motion_seed_density"] = motion_seed_density;
  j["geometry_seed_density"] = geometry_seed_density;
  j["plane_fallbacks"] = plane_fallbacks;
  j["affine_fallbacks"] = affine_fallbacks;
  j["interpolation_invalid"] = interpolation_invalid;
  j["egomotion_invoked"] = egomotion_invoked;
  j["egomotion_applied"] = egomotion_applied;
  if (!egomotion_warning.empty()) j["egomotion_warning"] = egomotion_warning;
  if (pose) {
    std::vector<double> r(pose->R.data(), pose->R.data() + 9);
    j["pose"] = {{"R_column_major", r}, {"t", {pose->t.x(), pose->t.y(), pose->t.z()}}};
    j["pose_inliers"] = pose_inliers;
  }
  j["moving_pixels"] = moving_pixels;
  j["egomotion_skipped"] = egomotion_skipped;
  j["refinement_invoked"] = refinement_invoked;
  j["refinement_energies"] = refinement_energies;
  j["refinement_aborted"] = refinement_aborted;
  return j.dump(2);
}

PipelineOutput run_pipeline(const StereoQuad& images, const CameraRig& rig,
                            const PipelineConfig& config) {
  config.validate();
  images.check_dimensions();
  PipelineOutput out;
  PipelineDiagnostics& diag = out.diagnostics;
  const int w = images.width();
  const int h = images.height();
  diag.pixels = static_cast<std::size_t>(w) * h;
  const MatcherOptions mopts = config.matcher_options();

  const SceneFlowField forward = run_stage(diag, "matching", [&] {
    return match_scene_flow(images, mopts).field.to_field();
  });
  const SceneFlowField inverse = run_stage(diag, "inverse matching", [&] {
    MatcherOptions inv = mopts;
    inv.seed = mopts.seed + 1;
    return inverse_field(images, inv);
  });
  const MatchSet joint = run_stage(diag, "filtering", [&] {
    const MatchSet consistent = consistency_filter(forward, inverse, config.filter.consistency_threshold);
    diag.consistent_matches = consistent.kept_count();
    RegionStats stats;
    MatchSet regions = region_filter(consistent, config.filter.region_tolerance,
                                     config.filter.min_region_size, &stats);
    diag.region_matches = regions.kept_count();
    diag.readmitted = stats.readmitted;
    diag.deleted_regions = stats.deleted_regions;
    return regions;
  });
  const GeometryCandidates geometry = run_stage(diag, "disparity fill", [&] {
    const DisparityMap sgm = sgm_disparity(images.left0.to_gray(), images.right0.to_gray(),
                                           config.sgm_options());
    for (std::uint8_t v : sgm.valid.data()) diag.sgm_valid += v;
    return disparity_fill(joint, forward.vectors, sgm, config.filter.consistency_threshold);
  });
  diag.geometry_candidates = geometry.count();
  diag.motion_seed_density = static_cast<double>(diag.region_matches) / diag.pixels;
  diag.geometry_seed_density = static_cast<double>(diag.geometry_candidates) / diag.pixels;

  out.seeds = run_stage(diag, "sparsification", [&] { return sparsify(joint, geometry); });
  diag.motion_seeds = out.seeds.motion.size();
  diag.geometry_seeds = out.seeds.geometry.size();

  const EdgeMap edges = run_stage(diag, "edges", [&] {
    return config.edge_source().provide(images.left0);
  });
  if (edges.width() != w || edges.height() != h) {
    throw Error(ErrorKind::kDimension, "stage edges: edge map does not match the images");
  }

  const InterpolationResult interp = run_stage(diag, "interpolation", [&] {
    return interpolate(out.seeds, edges, rig, config.interpolation_options());
  });
  diag.plane_fallbacks = interp.plane_fallbacks;
  diag.affine_fallbacks = interp.affine_fallbacks;
  diag.interpolation_invalid = interp.invalid_pixels;
  SceneFlowField field = interp.field;

  if (config.egomotion.enabled) {
    diag.egomotion_invoked = true;
    run_stage(diag, "egomotion", [&] {
      std::vector<PoseMatch> matches;
      matches.reserve(out.seeds.motion.size());
      for (const MotionSeed& s : out.seeds.motion) {
        matches.push_back({static_cast<double>(s.x), static_cast<double>(s.y), s.vector.d0,
                           s.vector.u, s.vector.v});
      }
      PoseEstimate pose;
      try {
        pose = estimate_pose(matches, rig, config.pose_options());
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumerical) throw;
        diag.egomotion_warning = std::string("ego-motion skipped: ") + e.what();
        return;
      }
      diag.pose = pose.pose;
      diag.pose_inliers = pose.stage2_inliers;
      std::vector<std::uint8_t> moving(matches.size());
      for (std::size_t i = 0; i < matches.size(); ++i) moving[i] = pose.inlier[i] ? 0 : 1;
      MotionMask mask = segment_motion(interp.motion_labeling, moving, config.interpolation.alpha,
                                       config.egomotion.segmentation_threshold);
      for (std::uint8_t m : mask.data()) diag.moving_pixels += m;
      field = apply_egomotion(field, mask, pose.pose, rig, &diag.egomotion_skipped);
      out.motion_mask = std::move(mask);
      diag.egomotion_applied = true;
    });
  }

  if (config.refinement.enabled) {
    diag.refinement_invoked = true;
    field = run_stage(diag, "refinement", [&] {
      return refine_field(field, images, edges, config.refinement.params, diag);
    });
  }
  out.field = std::move(field);
  return out;
}

CameraRig load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_error(ErrorKind::kIo, path.string() + ": cannot open calibration");
  double f = 0, cx = 0, cy = 0, b = 0;
  if (!(in >> f >> cx >> cy >> b)) {
    throw_error(ErrorKind::kIo, path.string() + ": expected 'f cx cy B'");
  }
  return CameraRig(f, cx, cy, b);
}

void save_calibration(const std::filesystem::path& path, const CameraRig& rig) {
  std::ofstream out(path);
  if (!out) throw_error(ErrorKind::kIo, path.string() + ": cannot open for writing");
  out.precision(17);
  out << rig.focal() << ' ' << rig.cx() << ' ' << rig.cy() << ' ' << rig.baseline() << '\n';
  if (!out) throw_error(ErrorKind::kIo, path.string() + ": write failed");
}

void write_outputs(const PipelineOutput& output, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw_error(ErrorKind::kIo, directory.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::string& name, auto&& fn) {
    const std::filesystem::path p = directory / name;
    written.push_back(p);
    fn(p);
  };
  try {
    const DisparityGrid d0 = disparity0_of(output.field);
    const DisparityGrid d1 = disparity1_of(output.field);
    const FlowMap flow = flow_of(output.field);
    write("disp0.png", [&](const auto& p) { write_disparity_png(p, d0); });
    write("disp1.png", [&](const auto& p) { write_disparity_png(p, d1); });
    write("flow.png", [&](const auto& p) { write_flow_png(p, flow); });
    auto to_pfm = [](const DisparityGrid& g) {
      PfmImage img{g.width(), g.height(), 1, std::vector<float>(g.size())};
      for (std::size_t i = 0; i < g.size(); ++i) {
        img.samples[i] = (g[i] > 0.0) ? static_cast<float>(g[i]) : std::numeric_limits<float>::infinity();
      }
      return img;
    };
    write("disp0.pfm", [&](const auto& p) { write_pfm(p, to_pfm(d0)); });
    write("disp1.pfm", [&](const auto& p) { write_pfm(p, to_pfm(d1)); });
    write("flow.pfm", [&](const auto& p) {
      PfmImage img{flow.width(), flow.height(), 3, std::vector<float>(flow.u.size() * 3)};
      for (std::size_t i = 0; i < flow.u.size(); ++i) {
        img.samples[3 * i] = static_cast<float>(flow.valid[i] ? flow.u[i] : 0.0);
        img.samples[3 * i + 1] = static_cast<float>(flow.valid[i] ? flow.v[i] : 0.0);
        img.samples[3 * i + 2] = flow.valid[i];
      }
      write_pfm(p, img);
    });
    if (output.motion_mask) {
      write("motion_mask.png", [&](const auto& p) {
        const MotionMask& m = *output.motion_mask;
        Image img(m.width(), m.height(), 1);
        for (std::size_t i = 0; i < m.size(); ++i) img.samples()[i] = m[i] ? 1.0f : 0.0f;
        write_png8(p, img);
      });
    }
    write("diagnostics.json", [&](const auto& p) {
      std::ofstream f(p);
      f << output.diagnostics.to_json() << '\n';
      if (!f) throw_error(ErrorKind::kIo, p.string() + ": write failed");
    });
  } catch (...) {
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
}

}  // namespace sceneflow
