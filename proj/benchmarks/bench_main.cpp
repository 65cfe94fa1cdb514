#include <benchmark/benchmark.h>

#include "refexp/dataset.hpp"
#include "refexp/evaluation.hpp"
#include "refexp/expression.hpp"
#include "synthetic.hpp"

using namespace refexp;

static std::vector<std::pair<BBox, BBox>> box_pairs(std::size_t n) {
  Rng rng(3);
  std::vector<std::pair<BBox, BBox>> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(fixture::random_grid_box(rng, 800), fixture::random_grid_box(rng, 800));
  }
  return out;
}

static void BM_Iou(benchmark::State& state) {
  const auto pairs = box_pairs(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ & 1023];
    benchmark::DoNotOptimize(iou(a, b));
  }
}
BENCHMARK(BM_Iou);

static void BM_Giou(benchmark::State& state) {
  const auto pairs = box_pairs(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ & 1023];
    benchmark::DoNotOptimize(giou(a, b));
  }
}
BENCHMARK(BM_Giou);

static void BM_GenerateExpression(benchmark::State& state) {
  fixture::SceneSpec spec;
  spec.min_objects = spec.max_objects = static_cast<int>(state.range(0));
  const auto scenes = fixture::random_scenes(9, 64, spec);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& scene = scenes[i++ & 63];
    for (const auto& o : scene.objects) {
      benchmark::DoNotOptimize(generate_expression(o.object_id, scene, i));
    }
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0));
}
BENCHMARK(BM_GenerateExpression)->Arg(4)->Arg(12)->Arg(30);

static void BM_BuildDataset(benchmark::State& state) {
  const auto scenes = fixture::random_scenes(5, 500);
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(build_dataset(scenes, 1, threads));
}
BENCHMARK(BM_BuildDataset)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
  const auto truth = fixture::make_samples(static_cast<int>(state.range(0)), 2, 4);
  Rng rng(8);
  std::vector<PredictionRecord> preds;
  for (const auto& s : truth) preds.push_back({s.sample_id, fixture::random_grid_box(rng, 800), std::nullopt});
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_predictions(preds, truth));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * truth.size()));
}
BENCHMARK(BM_Evaluate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
