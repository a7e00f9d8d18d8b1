#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "ergolab/noise.hpp"
#include "ergolab/occupation.hpp"
#include "ergolab/rates.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/sde.hpp"
#include "ergolab/wasserstein.hpp"

namespace {

ergolab::ProcessSpec ou_process(int dim, double dt) {
  ergolab::ProcessSpec p;
  p.drift = ergolab::DriftSpec::linear(1.0);
  p.diffusion = ergolab::DiffusionSpec::scalar(dim, 1.0);
  p.x0 = Eigen::VectorXd::Zero(dim);
  p.dt = dt;
  return p;
}

Eigen::MatrixXd gaussian_cloud(int n, int d, std::uint64_t seed) {
  ergolab::Rng rng(seed);
  Eigen::MatrixXd out(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = rng.normal();
  return out;
}

}  // namespace

static void BM_fit_rate(benchmark::State& state) {
  std::vector<double> t, v;
  for (int k = 0; k < state.range(0); ++k) {
    t.push_back(double(k + 1));
    v.push_back(1.0 / double(k + 1));
  }
  for (auto _ : state) {
    auto f = ergolab::fit_rate(t, v);
    benchmark::DoNotOptimize(f);
  }
}
BENCHMARK(BM_fit_rate)->Arg(16)->Arg(256);

// Euler integration throughput, states per second.
static void BM_euler_path(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  const int dim = static_cast<int>(state.range(1));
  const ergolab::ProcessSpec p = ou_process(dim, 1.0 / 256.0);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto path = ergolab::simulate_process(p, steps, seed++, p.x0, nullptr);
    benchmark::DoNotOptimize(path.states);
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_euler_path)->Args({4096, 1})->Args({4096, 3})->Args({65536, 1});

// Circulant-embedding fractional path sampling (plan built once outside).
static void BM_fbm_sample(benchmark::State& state) {
  ergolab::FbmSpec spec;
  spec.hurst = 0.75;
  spec.dt = 1.0 / 256.0;
  spec.steps = static_cast<int>(state.range(0));
  const ergolab::FbmSampler sampler(spec);
  std::uint64_t seed = 1;
  for (auto _ : state) {
    auto path = sampler.sample(1, seed++);
    benchmark::DoNotOptimize(path.values);
  }
  state.SetItemsProcessed(state.iterations() * spec.steps);
}
BENCHMARK(BM_fbm_sample)->Arg(4096)->Arg(65536);

// Exact 1d transport between equal-weight samples (sort dominated).
static void BM_wasserstein_1d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd x = gaussian_cloud(n, 1, 11u);
  const Eigen::MatrixXd y = gaussian_cloud(n, 1, 12u);
  for (auto _ : state) {
    const double w = ergolab::wasserstein_1d_exact(x.col(0), y.col(0), 1.0);
    benchmark::DoNotOptimize(w);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_wasserstein_1d)->Arg(1024)->Arg(65536);

// Empirical distance to a closed-form Gaussian in one pass.
static void BM_wasserstein_1d_gaussian(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd x = gaussian_cloud(n, 1, 13u);
  for (auto _ : state) {
    const double w = ergolab::wasserstein_1d_gaussian(x.col(0), 0.0, 1.0);
    benchmark::DoNotOptimize(w);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_wasserstein_1d_gaussian)->Arg(1024)->Arg(65536);

// Small-instance assignment solver.
static void BM_wasserstein_exact_small(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd x = gaussian_cloud(n, 2, 14u);
  const Eigen::MatrixXd y = gaussian_cloud(n, 2, 15u);
  for (auto _ : state) {
    const double w = ergolab::wasserstein_exact_small(x, y, 1.0);
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(BM_wasserstein_exact_small)->Arg(16)->Arg(48);

// Dyadic histogram build plus multiscale sum, the 3d experiment hot path.
static void BM_fg_sum(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = static_cast<int>(state.range(1));
  const int depth = d == 1 ? 10 : 6;
  const Eigen::MatrixXd x = gaussian_cloud(n, d, 16u);
  const auto target = ergolab::histogramize(gaussian_cloud(n, d, 17u), 5, depth);
  for (auto _ : state) {
    const auto h = ergolab::histogramize(x, 5, depth);
    const double s = ergolab::fg_multiscale_sum(h, target, 1.0).value;
    benchmark::DoNotOptimize(s);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_fg_sum)->Args({4096, 1})->Args({4096, 3});

// Occupation construction from a finished path.
static void BM_build_occupation(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  const ergolab::ProcessSpec p = ou_process(1, 1.0 / 256.0);
  const auto path = ergolab::simulate_process(p, steps, 33u, p.x0, nullptr);
  for (auto _ : state) {
    auto mu = ergolab::build_occupation(path, 0.0, 1);
    benchmark::DoNotOptimize(mu.points);
  }
  state.SetItemsProcessed(state.iterations() * steps);
}
BENCHMARK(BM_build_occupation)->Arg(65536);

BENCHMARK_MAIN();
