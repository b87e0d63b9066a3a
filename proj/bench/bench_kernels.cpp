// Serial reference against the OpenMP kernels, on shapes seen during
// embedding (graph nodes x feature width) and larger square products.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lensr/kernels.hpp"

namespace {

using lensr::Matrix;
namespace k = lensr::kernels;

Matrix random_matrix(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

template <bool Parallel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  Matrix a = random_matrix(n, d, 1), b = random_matrix(d, d, 2), out;
  for (auto _ : state) {
    if constexpr (Parallel) k::matmul(a, b, out);
    else k::serial::matmul(a, b, out);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * d * d));
}

template <bool Parallel>
void BM_GroupedMatmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  Matrix a = random_matrix(n, d, 3), out;
  std::vector<Matrix> w;
  for (unsigned t = 0; t < 5; ++t) w.push_back(random_matrix(d, d, 10 + t));
  std::vector<const Matrix*> wp;
  for (const Matrix& m : w) wp.push_back(&m);
  std::vector<int> group(n);
  for (std::size_t i = 0; i < n; ++i) group[i] = static_cast<int>(i % 5);
  for (auto _ : state) {
    if constexpr (Parallel) k::grouped_matmul(a, wp, group, out);
    else k::serial::grouped_matmul(a, wp, group, out);
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * d * d));
}

template <bool Parallel>
void BM_GroupedBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  Matrix a = random_matrix(n, d, 4), g = random_matrix(n, d, 5), ga(n, d);
  std::vector<Matrix> w, gw(5, Matrix(d, d));
  for (unsigned t = 0; t < 5; ++t) w.push_back(random_matrix(d, d, 20 + t));
  std::vector<const Matrix*> wp;
  std::vector<Matrix*> gwp;
  for (std::size_t t = 0; t < 5; ++t) {
    wp.push_back(&w[t]);
    gwp.push_back(&gw[t]);
  }
  std::vector<int> group(n);
  for (std::size_t i = 0; i < n; ++i) group[i] = static_cast<int>(i % 5);
  for (auto _ : state) {
    if constexpr (Parallel) k::grouped_matmul_backward(a, wp, group, g, &ga, gwp);
    else k::serial::grouped_matmul_backward(a, wp, group, g, &ga, gwp);
    benchmark::DoNotOptimize(ga.data().data());
  }
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({40, 50})->Args({200, 100})->Args({1000, 100})->Args({512, 512});
}

}  // namespace

BENCHMARK(BM_Matmul<false>)->Apply(shapes);
BENCHMARK(BM_Matmul<true>)->Apply(shapes);
BENCHMARK(BM_GroupedMatmul<false>)->Apply(shapes);
BENCHMARK(BM_GroupedMatmul<true>)->Apply(shapes);
BENCHMARK(BM_GroupedBackward<false>)->Apply(shapes);
BENCHMARK(BM_GroupedBackward<true>)->Apply(shapes);
BENCHMARK_MAIN();
