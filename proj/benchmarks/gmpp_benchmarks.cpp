#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "gmpp/datagen.hpp"
#include "gmpp/engine.hpp"
#include "gmpp/experts.hpp"
#include "gmpp/mixable_loss.hpp"
#include "gmpp/weight_state.hpp"

namespace {

void BM_Substitute(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> f(n), w(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = u(rng), w[i] = u(rng);
  const gmpp::OutcomeRange range(0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(gmpp::substitute(f, w, 2.0, range));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_Substitute)->Range(8, 1 << 14);

void BM_LossUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  gmpp::WeightState base;
  for (gmpp::ExpertId i = 1; i <= n; ++i) base.materialize(i);
  std::vector<double> losses(n, 0.3);
  for (auto _ : state) {
    gmpp::WeightState s = base;
    benchmark::DoNotOptimize(s.apply_loss_update(losses, 0.2, 1.0));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_LossUpdate)->Range(8, 1 << 14);

void BM_RidgeFit(benchmark::State& state) {
  const auto window = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<gmpp::Observation> obs(window);
  for (auto& o : obs) o = {{g(rng), g(rng), g(rng)}, g(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(gmpp::ridge_fit(obs, 0.01));
}
BENCHMARK(BM_RidgeFit)->Arg(20)->Arg(100)->Arg(1000);

// Full run; cost grows as T^2 because every step touches all experts.
void BM_EngineRun(benchmark::State& state) {
  const auto horizon = static_cast<std::size_t>(state.range(0));
  const auto pool = gmpp::make_generator_pool(4, 3, 0.1, gmpp::SignalLaw::uniform, 1);
  const auto schedule = gmpp::make_schedule(horizon, 10, 4, 1);
  const auto stream = gmpp::generate_stream(pool, schedule, 1);
  gmpp::EngineConfig config(gmpp::default_outcome_range(pool), 3);
  config.record_expert_detail = false;
  for (auto _ : state) benchmark::DoNotOptimize(gmpp::run(config, stream).records.size());
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(horizon));
}
BENCHMARK(BM_EngineRun)->Arg(500)->Arg(2000)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
