// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cadv/kernels.hpp"

namespace k = cadv::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(gen);
  return v;
}

template <auto Kernel>
void bm_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1);
  const auto b = random_values(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Kernel(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <auto Kernel>
void bm_attention(benchmark::State& state) {
  const auto seq = static_cast<std::size_t>(state.range(0));
  const std::vector<int> lengths(16, static_cast<int>(seq));
  const k::AttentionDims dims{16, seq, 4, 16, lengths};
  const std::size_t rows = dims.batch * dims.seq_len * dims.hidden();
  const auto q = random_values(rows, 3);
  const auto kk = random_values(rows, 4);
  const auto v = random_values(rows, 5);
  std::vector<double> out(rows), probs(dims.prob_size());
  for (auto _ : state) {
    Kernel(dims, q, kk, v, out, probs);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(bm_matmul<k::serial::matmul_nn>)->Name("matmul_nn/serial")->Arg(64)->Arg(256);
BENCHMARK(bm_matmul<k::matmul_nn>)->Name("matmul_nn/openmp")->Arg(64)->Arg(256);
BENCHMARK(bm_attention<k::serial::attention_forward>)->Name("attention_forward/serial")->Arg(32)->Arg(64);
BENCHMARK(bm_attention<k::attention_forward>)->Name("attention_forward/openmp")->Arg(32)->Arg(64);

BENCHMARK_MAIN();
