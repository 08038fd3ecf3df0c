#include <numeric>

#include <benchmark/benchmark.h>

#include "support.hpp"
#include "xai/explain_global.hpp"
#include "xai/explain_local.hpp"
#include "xai/synth.hpp"
#include "xai/tuning.hpp"

using namespace xai;

namespace {

synth::SyntheticData linear_data(std::size_t n) {
  synth::SyntheticSpec spec;
  spec.generator = "linear";
  spec.n_rows = n;
  spec.seed = 1;
  return synth::generate(spec);
}

models::GbmModel small_gbm(const synth::SyntheticData& d) {
  models::GbmParams params;
  params.n_trees = 50;
  params.max_depth = 3;
  return models::train_gbm(d.table, d.target, params);
}

void BM_TrainGbm(benchmark::State& state) {
  const auto d = linear_data(static_cast<std::size_t>(state.range(0)));
  models::GbmParams params;
  params.n_trees = 100;
  params.max_depth = 3;
  for (auto _ : state) benchmark::DoNotOptimize(models::train_gbm(d.table, d.target, params));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainGbm)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_CrossValidatedTrial(benchmark::State& state) {
  const auto d = linear_data(5000);
  models::GbmParams params;
  params.n_trees = 50;
  const auto folds = data::kfold(d.table, 5, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tuning::evaluate_trial(d.table, d.target, params, folds));
  }
}
BENCHMARK(BM_CrossValidatedTrial)->Unit(benchmark::kMillisecond);

void BM_ShapleyExact(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const auto t = fixtures::with_target(fixtures::uniform_table(500, p, 3), "y", [](auto r) {
    return std::accumulate(r.begin(), r.end(), 0.0);
  });
  models::GbmParams params;
  params.n_trees = 50;
  const auto model = models::train_gbm(t, "y", params);
  const Frame bg = fixtures::to_frame(fixtures::uniform_table(100, p, 4));
  const Frame x = fixtures::to_frame(fixtures::uniform_table(1, p, 5));
  std::vector<std::size_t> features(p);
  std::iota(features.begin(), features.end(), std::size_t{0});
  for (auto _ : state) {
    benchmark::DoNotOptimize(explain::shapley_exact(model, bg, x.row(0), features));
  }
}
BENCHMARK(BM_ShapleyExact)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_ShapleyMonteCarlo(benchmark::State& state) {
  const auto d = linear_data(2000);
  const auto model = small_gbm(d);
  const Frame bg = model.schema().encode(d.table);
  const std::vector<std::size_t> features{0, 1, 2, 3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(explain::shapley_mc(model, bg, bg.row(0), features, 2000, 6));
  }
}
BENCHMARK(BM_ShapleyMonteCarlo)->Unit(benchmark::kMillisecond);

void BM_Pdp(benchmark::State& state) {
  const auto d = linear_data(static_cast<std::size_t>(state.range(0)));
  const auto model = small_gbm(d);
  for (auto _ : state) benchmark::DoNotOptimize(explain::pdp(model, d.table, "x1", 20));
}
BENCHMARK(BM_Pdp)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Ale(benchmark::State& state) {
  const auto d = linear_data(10000);
  const auto model = small_gbm(d);
  for (auto _ : state) {
    benchmark::DoNotOptimize(explain::ale_first_order(model, d.table, "x1", 20));
  }
}
BENCHMARK(BM_Ale)->Unit(benchmark::kMillisecond);

void BM_Lime(benchmark::State& state) {
  const auto d = linear_data(2000);
  const auto model = small_gbm(d);
  explain::LimeOptions options;
  options.k_features = 3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(explain::lime_explain(model, d.table, d.table, 0, options));
  }
}
BENCHMARK(BM_Lime)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
