#include <benchmark/benchmark.h>

#include <array>
#include <random>

#include "deepkm/clustering.hpp"
#include "deepkm/losses.hpp"
#include "deepkm/metrics.hpp"
#include "deepkm/nn.hpp"

using namespace deepkm;

namespace {

Matrix gaussian(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// One minibatch step of the default 784-500-500-2000-10 network.
void BM_ForwardBackward(benchmark::State& state) {
  const Index batch = state.range(0);
  const AutoencoderParams params = init_autoencoder(default_architecture(784), 1);
  const Matrix x = gaussian(batch, 784, 2);
  for (auto _ : state) {
    const ForwardPass pass = forward(params, x);
    const ReconstructionLoss loss = reconstruction_loss(pass.output(), x);
    benchmark::DoNotOptimize(backward(params, pass, loss.grad_output));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardBackward)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
  const Matrix points = gaussian(state.range(0), 10, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kmeans(points, {10, 7, 100, 1e-6}));
  }
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_CtLoss(benchmark::State& state) {
  const Matrix latent = gaussian(256, 10, 4);
  const Centroids centroids(gaussian(state.range(0), 10, 5));
  const LossConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ct_loss(latent, centroids, config));
  }
}
BENCHMARK(BM_CtLoss)->Arg(10)->Arg(50);

void BM_Hungarian(benchmark::State& state) {
  const Matrix cost = gaussian(state.range(0), state.range(0), 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hungarian(cost));
  }
}
BENCHMARK(BM_Hungarian)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
