// Serial reference vs OpenMP kernels, plus forest fitting.
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "sentipipe/forest.hpp"
#include "sentipipe/kernels.hpp"
#include "sentipipe/rng.hpp"
#include "sentipipe/smote.hpp"

using namespace sentipipe;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (auto& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

EmbeddedDataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  EmbeddedDataset ds;
  ds.X = random_matrix(n, d, seed);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 3 == 0 ? 0 : i % 7 == 0 ? 1 : 2);
    ds.ids.push_back("r" + std::to_string(i));
  }
  ds.y = std::move(y);
  return ds;
}

template <kernels::Exec E>
void BM_PairwiseDistances(benchmark::State& state) {
  const auto X = random_matrix(static_cast<std::size_t>(state.range(0)), 768, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::pairwise_sq_distances(X, E));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

template <kernels::Exec E>
void BM_AffineScores(benchmark::State& state) {
  const auto X = random_matrix(static_cast<std::size_t>(state.range(0)), 768, 2);
  const auto W = random_matrix(3, 768, 3);
  const std::vector<double> b{0.1, 0.2, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(kernels::affine_scores(X, W, b, E));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <kernels::Exec E>
void BM_TransposeTimes(benchmark::State& state) {
  const auto A = random_matrix(static_cast<std::size_t>(state.range(0)), 3, 4);
  const auto X = random_matrix(static_cast<std::size_t>(state.range(0)), 768, 5);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::transpose_times(A, X, E));
}

template <kernels::Exec E>
void BM_Smote(benchmark::State& state) {
  const auto ds = random_dataset(static_cast<std::size_t>(state.range(0)), 64, 6);
  SmoteParams p;
  p.seed = 7;
  for (auto _ : state) benchmark::DoNotOptimize(smote(ds, p, E));
}

template <kernels::Exec E>
void BM_ForestFit(benchmark::State& state) {
  const auto ds = random_dataset(400, 64, 8);
  ForestParams p;
  p.n_trees = static_cast<std::size_t>(state.range(0));
  p.seed = 9;
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(ds, p, 3, E));
}

constexpr auto kSerial = kernels::Exec::serial;
constexpr auto kOmp = kernels::Exec::parallel;

}  // namespace

BENCHMARK(BM_PairwiseDistances<kSerial>)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseDistances<kOmp>)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AffineScores<kSerial>)->Arg(1024)->Arg(8192)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AffineScores<kOmp>)->Arg(1024)->Arg(8192)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TransposeTimes<kSerial>)->Arg(4096)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TransposeTimes<kOmp>)->Arg(4096)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Smote<kSerial>)->Arg(600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Smote<kOmp>)->Arg(600)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestFit<kSerial>)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestFit<kOmp>)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
