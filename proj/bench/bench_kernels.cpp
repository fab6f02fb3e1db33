// Serial reference vs OpenMP kernels, plus batched prediction.
//   lahcn_bench --benchmark_filter=gemm

#include <benchmark/benchmark.h>
#include <omp.h>

#include <vector>

#include "lahcn/kernels.hpp"
#include "lahcn/metrics.hpp"
#include "lahcn/rng.hpp"
#include "lahcn/synthetic.hpp"
#include "lahcn/training.hpp"

namespace {

using lahcn::kernels::Dims;
using Kernel = void (*)(Dims, std::span<const double>, std::span<const double>, std::span<double>);

std::vector<double> filled(std::size_t n, std::uint64_t seed) {
  lahcn::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void run_gemm(benchmark::State& state, Kernel kernel) {
  const auto s = static_cast<std::size_t>(state.range(0));
  const Dims d{s, s, s};
  const auto a = filled(s * s, 1);
  const auto b = filled(s * s, 2);
  std::vector<double> c(s * s);
  for (auto _ : state) {
    kernel(d, a, b, c);
    benchmark::DoNotOptimize(c.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s * s * s));
  state.counters["threads"] = omp_get_max_threads();
}

void BM_gemm_nn_serial(benchmark::State& st) { run_gemm(st, lahcn::kernels::serial::gemm_nn); }
void BM_gemm_nn_omp(benchmark::State& st) { run_gemm(st, lahcn::kernels::omp::gemm_nn); }
void BM_gemm_nt_serial(benchmark::State& st) { run_gemm(st, lahcn::kernels::serial::gemm_nt); }
void BM_gemm_nt_omp(benchmark::State& st) { run_gemm(st, lahcn::kernels::omp::gemm_nt); }
void BM_gemm_tn_serial(benchmark::State& st) { run_gemm(st, lahcn::kernels::serial::gemm_tn); }
void BM_gemm_tn_omp(benchmark::State& st) { run_gemm(st, lahcn::kernels::omp::gemm_tn); }

#define SIZES ->Arg(64)->Arg(128)->Arg(256)->Arg(512)
BENCHMARK(BM_gemm_nn_serial) SIZES;
BENCHMARK(BM_gemm_nn_omp) SIZES;
BENCHMARK(BM_gemm_nt_serial) SIZES;
BENCHMARK(BM_gemm_nt_omp) SIZES;
BENCHMARK(BM_gemm_tn_serial) SIZES;
BENCHMARK(BM_gemm_tn_omp) SIZES;

// Forward pass over the synthetic corpus with freshly initialised parameters;
// range(0) is the thread count.
void BM_predict_batch(benchmark::State& state) {
  const auto corpus = lahcn::make_synthetic_corpus();
  const auto vocab = lahcn::build_vocabulary(corpus.documents);
  const lahcn::TrainConfig cfg;
  const auto params =
      lahcn::init_params(cfg, corpus.hierarchy, vocab, lahcn::initial_embeddings(cfg, vocab));
  const auto batch = lahcn::encode_batch(corpus.documents, vocab, corpus.hierarchy, cfg.max_len);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lahcn::predict_batch(params, batch, cfg.alpha));
  omp_set_num_threads(saved);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size));
}
BENCHMARK(BM_predict_batch)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
