#include <benchmark/benchmark.h>

#include <map>
#include <utility>

#include "rtfa/estimators.hpp"
#include "rtfa/rank_selection.hpp"
#include "rtfa/simulation.hpp"

using namespace rtfa;

namespace {

const SimulatedDataset& dataset(char setting, std::size_t T) {
  static std::map<std::pair<char, std::size_t>, SimulatedDataset> cache;
  auto it = cache.find({setting, T});
  if (it == cache.end())
    it = cache.emplace(std::pair{setting, T}, gen_dataset(preset_setting(setting, T, NoiseLaw::student_t(3), 1))).first;
  return it->second;
}

void BM_ProjectionCov(benchmark::State& state) {
  const auto& d = dataset('C', static_cast<std::size_t>(state.range(0)));
  const LoadingSet& a = d.true_loadings;
  for (auto _ : state) benchmark::DoNotOptimize(projection_cov(d.observations, 0, a));
}
BENCHMARK(BM_ProjectionCov)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& state) {
  const auto& d = dataset(static_cast<char>(state.range(0)), 200);
  EstimationConfig cfg;
  cfg.ranks = {3, 3, 3};
  cfg.method = state.range(1) ? Method::huber : Method::least_squares;
  for (auto _ : state) benchmark::DoNotOptimize(fit(d.observations, cfg));
}
BENCHMARK(BM_Fit)->ArgsProduct({{'A', 'C'}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_EstimateRanks(benchmark::State& state) {
  const auto& d = dataset('C', 200);
  RankConfig cfg;
  cfg.method = state.range(0) ? Method::huber : Method::least_squares;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_ranks(d.observations, cfg));
}
BENCHMARK(BM_EstimateRanks)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
