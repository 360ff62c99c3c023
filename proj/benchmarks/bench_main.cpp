#include <benchmark/benchmark.h>

#include <random>

#include "sceneflow/geodesic.hpp"
#include "sceneflow/matcher.hpp"
#include "sceneflow/refiner.hpp"
#include "sceneflow/sgm.hpp"
#include "sceneflow/synth.hpp"

using namespace sceneflow;

namespace {

const SyntheticScene& scene() {
  static const SyntheticScene s = synth_scene(default_scene_spec(256, 128, 1));
  return s;
}

const ScaleFeatures& full_features() {
  static const std::vector<ScaleFeatures> f = build_scale_features(build_scale_pyramid(scene().images, 0));
  return f[0];
}

void BM_MatchingCost(benchmark::State& state) {
  const CostContext ctx{&full_features(), 3};
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> off(-10.0, 10.0);
  std::vector<SceneFlowVector> v(1024);
  for (auto& x : v) x = {off(rng), off(rng) / 4.0, 5.0 + std::abs(off(rng)), 5.0 + std::abs(off(rng))};
  std::size_t i = 0;
  for (auto _ : state) {
    const SceneFlowVector& c = v[i++ & 1023];
    benchmark::DoNotOptimize(matching_cost(ctx, 64 + static_cast<int>(i % 128), 64, c));
  }
}
BENCHMARK(BM_MatchingCost);

void BM_PropagationIteration(benchmark::State& state) {
  const ScaleFeatures& f = full_features();
  const MatcherOptions opt;
  const KdForest forest = build_kd_forest(f, opt);
  const MatchField init = kdtree_init(f, forest, opt);
  for (auto _ : state) {
    MatchField field = init;
    SearchRng rng(0);
    propagate_and_search(field, f, 1, rng, opt);
    benchmark::DoNotOptimize(field.cost.data().data());
  }
  state.SetItemsProcessed(state.iterations() * init.grid_width() * init.grid_height());
}
BENCHMARK(BM_PropagationIteration)->Unit(benchmark::kMillisecond);

void BM_Sgm(benchmark::State& state) {
  const GrayImage l = scene().images.left0.to_gray();
  const GrayImage r = scene().images.right0.to_gray();
  SgmOptions opt;
  opt.max_disparity = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sgm_disparity(l, r, opt));
}
BENCHMARK(BM_Sgm)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_GeodesicLabeling(benchmark::State& state) {
  const EdgeMap edges = detect_edges(scene().images.left0);
  std::vector<PixelRef> seeds;
  for (int y = 1; y < edges.height(); y += 3) {
    for (int x = 1; x < edges.width(); x += 3) seeds.push_back({x, y});
  }
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(geodesic_labeling(seeds, edges, n));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seeds.size()));
}
BENCHMARK(BM_GeodesicLabeling)->Arg(80)->Arg(160)->Unit(benchmark::kMillisecond);

void BM_SorSweeps(benchmark::State& state) {
  const SyntheticScene& s = scene();
  const int w = s.images.width();
  const int h = s.images.height();
  MotionField field(w, h);
  Grid<double> d0(w, h);
  for (std::size_t i = 0; i < d0.size(); ++i) {
    const SceneFlowVector& v = s.ground_truth.vectors[i];
    field.u[i] = v.u + 0.3;
    field.v[i] = v.v - 0.2;
    field.dp[i] = v.d1 - v.d0;
    d0[i] = v.d0;
  }
  const RefineImages img{s.images.left0.to_gray(), s.images.left1.to_gray(), s.images.right1.to_gray()};
  const LinearizedSystem sys(field, d0, img, detect_edges(s.images.left0), RefineParams{});
  for (auto _ : state) {
    Increments x(w, h);
    sys.sor(x, 30);
    benchmark::DoNotOptimize(x.du.data().data());
  }
}
BENCHMARK(BM_SorSweeps)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
