#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "pfm/fisher.hpp"
#include "pfm/gmm.hpp"
#include "pfm/optflow.hpp"

using namespace pfm;

namespace {

FloatImage texture(int w, int h, double dx) {
  FloatImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = x - dx;
      img(x, y) = static_cast<float>(128 + 40 * std::sin(0.31 * u + 0.17 * y) + 30 * std::cos(0.11 * u - 0.23 * y));
    }
  return img;
}

Eigen::MatrixXd gaussian(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

void BM_Flow(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0)), h = w * 3 / 4;
  const FloatImage a = texture(w, h, 0), b = texture(w, h, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(compute_flow(a, b));
  state.SetItemsProcessed(state.iterations() * w * h);
}
BENCHMARK(BM_Flow)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_EmIteration(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const Eigen::MatrixXd x = gaussian(5000, 318, 1);
  EmParams p;
  p.max_iters = 1;
  p.tol = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(fit_gmm(x, k, p));
  state.SetItemsProcessed(state.iterations() * x.rows());
}
BENCHMARK(BM_EmIteration)->Arg(16)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FisherVector(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const Eigen::MatrixXd x = gaussian(2000, 318, 2);
  const GaussianMixture gmm(Eigen::VectorXd::Ones(k), gaussian(k, 318, 3), Eigen::MatrixXd::Constant(k, 318, 1.5));
  for (auto _ : state) benchmark::DoNotOptimize(fisher_vector(x, gmm));
  state.SetItemsProcessed(state.iterations() * x.rows());
}
BENCHMARK(BM_FisherVector)->Arg(100)->Arg(150)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
