#include <benchmark/benchmark.h>

#include "drbsde/catalog.hpp"
#include "drbsde/compare.hpp"
#include "drbsde/games.hpp"
#include "drbsde/solver.hpp"
#include "drbsde/transform.hpp"

using namespace drbsde;

static void BM_SolveQuadratic(benchmark::State& state) {
  const ProblemSpec spec = catalog::quadratic_z(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve(spec).root());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveQuadratic)->RangeMultiplier(2)->Range(16, 512)->Complexity(benchmark::oNSquared);

static void BM_SolveRandom(benchmark::State& state) {
  const ProblemSpec spec = catalog::random_problem(7, 32);
  for (auto _ : state) benchmark::DoNotOptimize(solve(spec).root());
}
BENCHMARK(BM_SolveRandom);

static void BM_TransformRoute(benchmark::State& state) {
  const ProblemSpec spec = catalog::quadratic_z(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_via_transform(spec).root());
}
BENCHMARK(BM_TransformRoute)->Arg(32)->Arg(64)->Arg(128);

static void BM_SaddleCheck(benchmark::State& state) {
  const DynkinGameSpec game = random_game(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(saddle_check(game).value);
}
BENCHMARK(BM_SaddleCheck)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

static void BM_GameOption(benchmark::State& state) {
  MarketModel m;
  m.rate = 0.05;
  m.volatility = 0.3;
  GameOptionPayoffs p;
  p.lower = p.tie = p.terminal = node_fn::put(100.0);
  p.upper = [](const NodeContext& c) { return std::max(100.0 - c.s, 0.0) + 2.0; };
  const TimeGrid grid(1.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(price_game_option(m, grid, p).price);
}
BENCHMARK(BM_GameOption)->Arg(64)->Arg(256);

static void BM_ComparisonFuzz(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(comparison_fuzz(10, 1).failed_pairs);
}
BENCHMARK(BM_ComparisonFuzz)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
