// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <vector>

#include "egg/kernels.hpp"
#include "egg/rng.hpp"

namespace {

namespace k = egg::kernels;

std::vector<double> random_buffer(std::size_t n, std::uint64_t seed) {
  egg::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_buffer(n * n, 1), b = random_buffer(n * n, 2);
  std::vector<double> c(n * n);
  const k::GemmShape s{n, n, n};
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::gemm(s, a, b, c, false);
    } else {
      k::serial::gemm(s, a, b, c, false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}

template <bool Parallel>
void BM_Softmax(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 64;
  const auto in = random_buffer(rows * cols, 3);
  std::vector<double> out(in.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::softmax_rows(in, out, rows, cols);
    } else {
      k::serial::softmax_rows(in, out, rows, cols);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows * cols));
}

template <bool Parallel>
void BM_Tanh(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto in = random_buffer(n, 4);
  std::vector<double> out(n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::unary(k::Unary::tanh, in, out);
    } else {
      k::serial::unary(k::Unary::tanh, in, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Name("gemm/serial")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_Gemm<true>)->Name("gemm/parallel")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_Softmax<false>)->Name("softmax/serial")->Range(256, 16384);
BENCHMARK(BM_Softmax<true>)->Name("softmax/parallel")->Range(256, 16384);
BENCHMARK(BM_Tanh<false>)->Name("tanh/serial")->Range(1 << 12, 1 << 20);
BENCHMARK(BM_Tanh<true>)->Name("tanh/parallel")->Range(1 << 12, 1 << 20);

BENCHMARK_MAIN();
