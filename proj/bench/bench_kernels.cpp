// Serial reference vs OpenMP variants of the dense-layer kernels, plus the
// exact Steiner enumeration. Sizes follow the 28-node topology: a 6*28*28
// sparse input feeding 256-wide hidden layers.
#include <benchmark/benchmark.h>

#include <vector>

#include "macdmr/baselines.hpp"
#include "macdmr/kernels.hpp"
#include "macdmr/random.hpp"
#include "macdmr/state.hpp"
#include "macdmr/topogen.hpp"

using namespace macdmr;
using namespace macdmr::kernels;

namespace {

constexpr int kIn = 6 * 28 * 28;
constexpr int kHidden = 256;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

SparseVec random_sparse(int n, int nnz, std::uint64_t seed) {
  Rng rng(seed);
  SparseVec x;
  for (int i = 0; i < n && static_cast<int>(x.idx.size()) < nnz; ++i) {
    if (rng.uniform() < 2.0 * nnz / n) {
      x.idx.push_back(i);
      x.val.push_back(rng.uniform());
    }
  }
  return x;
}

template <auto Fn>
void BM_affine_dense(benchmark::State& st) {
  const auto W = random_vec(kHidden * kHidden, 1), b = random_vec(kHidden, 2),
             x = random_vec(kHidden, 3);
  std::vector<double> y(kHidden);
  for (auto _ : st) {
    Fn(W.data(), b.data(), x.data(), kHidden, kHidden, y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Fn>
void BM_affine_sparse(benchmark::State& st) {
  const auto W = random_vec(static_cast<std::size_t>(kIn) * kHidden, 1),
             b = random_vec(kHidden, 2);
  const SparseVec x = random_sparse(kIn, 400, 3);
  std::vector<double> y(kHidden);
  for (auto _ : st) {
    Fn(W.data(), b.data(), x, kHidden, y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

template <auto Fn>
void BM_backprop_input(benchmark::State& st) {
  const auto W = random_vec(kHidden * kHidden, 1), d = random_vec(kHidden, 2);
  std::vector<double> g(kHidden);
  for (auto _ : st) {
    Fn(W.data(), d.data(), kHidden, kHidden, g.data());
    benchmark::DoNotOptimize(g.data());
  }
}

template <auto Fn>
void BM_outer_dense(benchmark::State& st) {
  auto W = random_vec(kHidden * kHidden, 1), b = random_vec(kHidden, 2);
  const auto x = random_vec(kHidden, 3), d = random_vec(kHidden, 4);
  for (auto _ : st) {
    Fn(W.data(), b.data(), x.data(), d.data(), 1e-9, kHidden, kHidden);
    benchmark::DoNotOptimize(W.data());
  }
}

template <auto Fn>
void BM_outer_sparse(benchmark::State& st) {
  auto W = random_vec(static_cast<std::size_t>(kIn) * kHidden, 1), b = random_vec(kHidden, 2);
  const SparseVec x = random_sparse(kIn, 400, 3);
  const auto d = random_vec(kHidden, 4);
  for (auto _ : st) {
    Fn(W.data(), b.data(), x, d.data(), 1e-9, kHidden);
    benchmark::DoNotOptimize(W.data());
  }
}

template <bool Parallel>
void BM_exact_steiner(benchmark::State& st) {
  TopoGenParams tp;
  tp.n_domains = 2;
  tp.nodes_per_domain = 7;
  tp.seed = 3;
  const GeneratedInstance gi = generate_random(tp);
  const SnapshotView view = make_view(gi.topology, gi.metrics, CostWeights{});
  const WeightedGraph g = symmetric_graph(gi.topology.network, view.weights);
  const std::vector<NodeId> terms = {0, 3, 6, 9, 12};
  for (auto _ : st) {
    SteinerTree t = Parallel ? exact_steiner(g, terms) : exact_steiner_serial(g, terms);
    benchmark::DoNotOptimize(t.cost);
  }
}

}  // namespace

BENCHMARK(BM_affine_dense<affine_dense_serial>)->Name("affine_dense/serial");
BENCHMARK(BM_affine_dense<affine_dense_omp>)->Name("affine_dense/omp");
BENCHMARK(BM_affine_sparse<affine_sparse_serial>)->Name("affine_sparse/serial");
BENCHMARK(BM_affine_sparse<affine_sparse_omp>)->Name("affine_sparse/omp");
BENCHMARK(BM_backprop_input<backprop_input_serial>)->Name("backprop_input/serial");
BENCHMARK(BM_backprop_input<backprop_input_omp>)->Name("backprop_input/omp");
BENCHMARK(BM_outer_dense<outer_update_dense_serial>)->Name("outer_update_dense/serial");
BENCHMARK(BM_outer_dense<outer_update_dense_omp>)->Name("outer_update_dense/omp");
BENCHMARK(BM_outer_sparse<outer_update_sparse_serial>)->Name("outer_update_sparse/serial");
BENCHMARK(BM_outer_sparse<outer_update_sparse_omp>)->Name("outer_update_sparse/omp");
BENCHMARK(BM_exact_steiner<false>)->Name("exact_steiner/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_exact_steiner<true>)->Name("exact_steiner/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
