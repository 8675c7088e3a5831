#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "ccr/evaluation.hpp"
#include "ccr/losses.hpp"
#include "ccr/mock_lm.hpp"
#include "ccr/probe.hpp"
#include "ccr/trainer.hpp"

namespace {

void BM_KendallTau(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::size_t> gold(n), pred(n);
  std::iota(gold.begin(), gold.end(), 0);
  pred = gold;
  std::shuffle(pred.begin(), pred.end(), ccr::Rng(7));
  for (auto _ : state) benchmark::DoNotOptimize(ccr::kendall_tau(pred, gold));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTau)->RangeMultiplier(4)->Range(16, 16384)->Complexity(benchmark::oNLogN);

void BM_OrdRegLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  ccr::Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> m(n * n);
  for (double& x : m) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(ccr::ordreg_ccr(m, n, n).total);
}
BENCHMARK(BM_OrdRegLoss)->Arg(6)->Arg(12)->Arg(24);

void BM_CoralBiases(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(ccr::coral_biases(2.0, 3.0, state.range(0)).b);
}
BENCHMARK(BM_CoralBiases)->Arg(8)->Arg(64);

// One full training run (200 epochs) on a planted task, per loss.
void BM_TrainPlanted(benchmark::State& state) {
  const auto kind = static_cast<ccr::LossKind>(state.range(0));
  const ccr::Dataset ds = ccr::generate_planted(1, 8, 11);
  const auto records = ccr::mock::embeddings(ds.tasks[0], 16, 0.05, 11);
  const ccr::TaskActivations acts = ccr::normalize_task(ccr::collect_task(records, ds.tasks[0]));
  ccr::TrainConfig cfg;
  cfg.seed = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ccr::train_probe(std::span(&acts, 1), kind, cfg).final_loss);
  }
  state.SetLabel(std::string(ccr::to_string(kind)));
}
BENCHMARK(BM_TrainPlanted)
    ->Arg(static_cast<int>(ccr::LossKind::MarginCcr))
    ->Arg(static_cast<int>(ccr::LossKind::TripletCcr))
    ->Arg(static_cast<int>(ccr::LossKind::OrdRegCcr))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
