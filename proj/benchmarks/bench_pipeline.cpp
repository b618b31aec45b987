// Stage and pipeline benchmarks on a synthetic Poisson dataset. The interesting
// questions are how the rank partition scales with the strata count and what
// the stratified estimators cost next to plain uniform subsampling.

#include <benchmark/benchmark.h>

#include "mvrs/pipeline.hpp"
#include "mvrs/simgen.hpp"

namespace {

const mvrs::Dataset& big_dataset() {
  static const mvrs::Dataset data = [] {
    mvrs::SimConfig cfg;
    cfg.family = mvrs::Family::Poisson;
    cfg.n_rows = 1000000;
    cfg.seed = 20240901;
    return mvrs::gen_dataset(cfg);
  }();
  return data;
}

struct PilotParts {
  mvrs::PilotStage pilot;
  mvrs::Vector probs;
  mvrs::Direction dir;
  mvrs::Vector scores;
};

const PilotParts& pilot_parts() {
  static const PilotParts parts = [] {
    const mvrs::Dataset& data = big_dataset();
    PilotParts p;
    p.pilot = mvrs::run_pilot(data, mvrs::Family::Poisson, 200, 7);
    p.probs = mvrs::uniform_probs(data.n_rows).probs;
    p.dir = mvrs::leading_direction(data, mvrs::Family::Poisson, p.pilot.fit, p.pilot.rows);
    p.scores = mvrs::strat_scores(data, mvrs::Family::Poisson, p.dir, p.pilot.fit.theta);
    return p;
  }();
  return parts;
}

void BM_PartitionEqualCount(benchmark::State& state) {
  const mvrs::Vector& scores = pilot_parts().scores;
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mvrs::partition_equal_count(scores, k));
  }
}
BENCHMARK(BM_PartitionEqualCount)->Arg(5)->Arg(10)->Arg(50)->Arg(100);

void BM_StratScores(benchmark::State& state) {
  const mvrs::Dataset& data = big_dataset();
  const PilotParts& p = pilot_parts();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mvrs::strat_scores(data, mvrs::Family::Poisson, p.dir, p.pilot.fit.theta));
  }
}
BENCHMARK(BM_StratScores);

void BM_OptimalProbs(benchmark::State& state) {
  const mvrs::Dataset& data = big_dataset();
  const PilotParts& p = pilot_parts();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        mvrs::optimal_probs(data, mvrs::Family::Poisson, p.pilot.fit, p.pilot.rows));
  }
}
BENCHMARK(BM_OptimalProbs);

void BM_StratifiedDraw(benchmark::State& state) {
  const PilotParts& p = pilot_parts();
  mvrs::StratPlan plan;
  plan.part = mvrs::partition_equal_count(p.scores, 30);
  plan.alloc = mvrs::allocate(plan.part, p.probs, 1000);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mvrs::stratified_draw(plan, p.probs, seed++));
  }
}
BENCHMARK(BM_StratifiedDraw);

void BM_Pipeline(benchmark::State& state) {
  const mvrs::Dataset& data = big_dataset();
  mvrs::PipelineConfig cfg;
  cfg.method = static_cast<mvrs::Method>(state.range(0));
  cfg.n = 1000;
  cfg.n0 = 200;
  cfg.k = static_cast<std::size_t>(state.range(1));
  cfg.want_variance = false;
  std::uint64_t seed = 1;
  for (auto _ : state) {
    cfg.seed = seed++;
    benchmark::DoNotOptimize(mvrs::run_pipeline(data, mvrs::Family::Poisson, cfg));
  }
}
BENCHMARK(BM_Pipeline)
    ->ArgsProduct({{static_cast<int>(mvrs::Method::Unif)}, {1}})
    ->ArgsProduct({{static_cast<int>(mvrs::Method::MvrsU)}, {5, 30, 100}})
    ->ArgsProduct({{static_cast<int>(mvrs::Method::MvrsO)}, {30}})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
