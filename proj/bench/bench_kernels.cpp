// Serial reference vs OpenMP paths of the column-parallel kernels.
// Thread count follows OMP_NUM_THREADS.

#include "oracles.hpp"
#include "prenmf/cllsolve.hpp"
#include "prenmf/nmf.hpp"

#include <benchmark/benchmark.h>

using namespace prenmf;

namespace {

Matrix low_rank(Index m, Index n, Index r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return oracle::random_nonneg(m, r, rng) * oracle::random_nonneg(r, n, rng) +
         1e-3 * oracle::random_nonneg(m, n, rng);
}

void BM_PreprocessSerial(benchmark::State& st) {
  const Matrix m = low_rank(40, st.range(0), 5, 1);
  for (auto _ : st) benchmark::DoNotOptimize(preprocess_matrix_serial(m, 0.0));
}

void BM_PreprocessOmp(benchmark::State& st) {
  const Matrix m = low_rank(40, st.range(0), 5, 1);
  for (auto _ : st) benchmark::DoNotOptimize(preprocess_matrix(m, 0.0));
}

void BM_ColumnsSerialEps(benchmark::State& st) {
  const Matrix m = low_rank(40, st.range(0), 5, 2);
  for (auto _ : st) benchmark::DoNotOptimize(solve_all_columns_serial(m, 0.01).b_star);
}

void BM_ColumnsOmpEps(benchmark::State& st) {
  const Matrix m = low_rank(40, st.range(0), 5, 2);
  for (auto _ : st) benchmark::DoNotOptimize(solve_all_columns(m, 0.01).b_star);
}

void BM_RefitSerial(benchmark::State& st) {
  std::mt19937_64 rng(3);
  const Matrix u = oracle::random_nonneg(100, 8, rng);
  const Matrix m = oracle::random_nonneg(100, st.range(0), rng);
  for (auto _ : st) benchmark::DoNotOptimize(refit_v_serial(m, u).v);
}

void BM_RefitOmp(benchmark::State& st) {
  std::mt19937_64 rng(3);
  const Matrix u = oracle::random_nonneg(100, 8, rng);
  const Matrix m = oracle::random_nonneg(100, st.range(0), rng);
  for (auto _ : st) benchmark::DoNotOptimize(refit_v(m, u).v);
}

void pipeline_seeds(benchmark::State& st, bool serial) {
  const Matrix m = low_rank(50, 40, 4, 4);
  PipelineOptions opt;
  opt.max_outer = 200;
  opt.serial = serial;
  for (auto _ : st) benchmark::DoNotOptimize(run_pipeline(m, 4, opt).plain.rel_error);
}

void BM_PipelineSeedsSerial(benchmark::State& st) { pipeline_seeds(st, true); }
void BM_PipelineSeedsOmp(benchmark::State& st) { pipeline_seeds(st, false); }

}  // namespace

BENCHMARK(BM_PreprocessSerial)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PreprocessOmp)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ColumnsSerialEps)->Arg(60)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ColumnsOmpEps)->Arg(60)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RefitSerial)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RefitOmp)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PipelineSeedsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PipelineSeedsOmp)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
