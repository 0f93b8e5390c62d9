#include <benchmark/benchmark.h>

#include <omp.h>

#include "covest/experiment.hpp"
#include "covest/kernels.hpp"
#include "covest/rng.hpp"

using namespace covest;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

Eigen::MatrixXd uniforms(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform();
  }
  return m;
}

void outer_sum_args(benchmark::internal::Benchmark* b) {
  for (int n : {16, 64, 256}) {
    for (int t : {300, 5000}) b->Args({t, n});
  }
}

void BM_OuterSumSerial(benchmark::State& state) {
  const Eigen::MatrixXd x = gaussian(state.range(0), state.range(1), 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::outer_sum_serial(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_OuterSumParallel(benchmark::State& state) {
  const Eigen::MatrixXd x = gaussian(state.range(0), state.range(1), 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::outer_sum_parallel(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ApplyMasksSerial(benchmark::State& state) {
  const Eigen::MatrixXd x = gaussian(state.range(0), state.range(1), 2);
  const Eigen::MatrixXd u = uniforms(state.range(0), state.range(1), 3);
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(state.range(1), 0.5);
  Eigen::MatrixXd y;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::apply_masks_serial(x, u, p, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ApplyMasksParallel(benchmark::State& state) {
  const Eigen::MatrixXd x = gaussian(state.range(0), state.range(1), 2);
  const Eigen::MatrixXd u = uniforms(state.range(0), state.range(1), 3);
  const Eigen::VectorXd p = Eigen::VectorXd::Constant(state.range(1), 0.5);
  Eigen::MatrixXd y;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::apply_masks_parallel(x, u, p, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

// Trial-level parallelism: the bundled three-budget experiment at 8 trials,
// with the thread count as the argument.
void BM_Experiment(benchmark::State& state) {
  ExperimentSpec s;
  s.source.n = 16;
  s.source.spikes = 2;
  s.source.spike = 50.0;
  s.source.theta_times_n = 1.0;
  s.source.model_seed = 2024;
  s.arms = {Arm::uniform, Arm::designed, Arm::active};
  s.trials = 8;
  s.jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(s));
}

}  // namespace

BENCHMARK(BM_OuterSumSerial)->Apply(outer_sum_args);
BENCHMARK(BM_OuterSumParallel)->Apply(outer_sum_args);
BENCHMARK(BM_ApplyMasksSerial)->Args({5000, 64})->Args({5000, 784});
BENCHMARK(BM_ApplyMasksParallel)->Args({5000, 64})->Args({5000, 784});
BENCHMARK(BM_Experiment)->DenseRange(1, std::max(1, omp_get_max_threads()))->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
