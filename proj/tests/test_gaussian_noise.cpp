#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ergolab/noise.hpp"
#include "ergolab/rng.hpp"
#include "oracles.hpp"

#include <cmath>
#include <vector>

using ergolab::FbmSampler;
using ergolab::FbmSpec;
using ergolab::KernelSpec;
using ergolab::MovingAverageKernel;
using ergolab::NoisePath;

namespace {

// Covariance of increments of fBm from the path covariance alone, so the
// check is independent of the closed-form increment formula.
double fgn_from_path_cov(double hurst, double dt, int lag) {
  const double a = lag * dt, b = (lag + 1) * dt;
  return oracle::fbm_cov(hurst, b, dt) - oracle::fbm_cov(hurst, a, dt);
}

// Covariance implied by the discretization weights, no sampling involved.
double scheme_cov(const ergolab::MovingAverageScheme& s, int k, int l) {
  if (k > l) std::swap(k, l);
  const auto& A = s.cell_integrals;
  double acc = 0.0;
  for (int j = 1; j <= s.past_cells; ++j)
    acc += (A[k + j - 1] - A[j - 1]) * (A[l + j - 1] - A[j - 1]);
  for (int m = 1; m < k; ++m) acc += A[k - m] * A[l - m];
  acc += s.w0 * (l == k ? s.w0 : A[l - k]);
  return acc;
}

// Normalizer of the power-kernel moving average: with g(t) = t^(H-1/2) the
// resulting process is fBm scaled by 1/c_H, c_H^2 as below.
double mvn_norm_sq(double h) {
  return 2.0 * h * std::tgamma(1.5 - h) /
         (std::tgamma(h + 0.5) * std::tgamma(2.0 - 2.0 * h));
}

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a - b).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

TEST_CASE("brownian paths: grid, determinism, moments") {
  const int steps = 16, dim = 2;
  const double dt = 0.25;
  const NoisePath p = ergolab::sample_brownian(steps, dt, dim, 99u);
  CHECK(p.generator_tag == "brownian");
  CHECK(p.steps() == steps);
  CHECK(p.dim() == dim);
  CHECK(p.dt() == doctest::Approx(dt).epsilon(1e-15));
  for (int k = 0; k <= steps; ++k)
    CHECK(p.times[k] == doctest::Approx(k * dt).epsilon(1e-15));
  CHECK(p.values.row(0).norm() == 0.0);

  const NoisePath q = ergolab::sample_brownian(steps, dt, dim, 99u);
  CHECK(same(p.values, q.values));
  // coordinate streams: column c is independent of how many columns exist
  const NoisePath one = ergolab::sample_brownian(steps, dt, 1, 99u);
  CHECK(same(p.values.col(0), one.values.col(0)));

  const int n = 20000;
  const double t = steps * dt;
  double s1 = 0.0, s2 = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    const NoisePath w =
        ergolab::sample_brownian(steps, dt, dim, ergolab::child_seed(7u, i));
    const double x = w.values(steps, 0), y = w.values(steps, 1);
    s1 += x;
    s2 += x * x;
    sxy += x * y;
  }
  const double m = s1 / n, v = s2 / n - m * m, cxy = sxy / n;
  CHECK(std::abs(m) <= 3.5 * std::sqrt(t / n));
  CHECK(std::abs(v - t) <= 3.5 * t * std::sqrt(2.0 / n));
  CHECK(std::abs(cxy) <= 3.5 * t / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("fgn autocovariance agrees with path covariance differences") {
  for (double h : {0.25, 0.5, 0.75}) {
    for (double dt : {0.0625, 1.0, 2.5}) {
      for (int k = 0; k <= 16; ++k) {
        const double want = fgn_from_path_cov(h, dt, k);
        const double got = ergolab::fgn_autocovariance(h, dt, k);
        CHECK(std::abs(got - want) <=
              1e-12 * std::max(1.0, std::abs(want)));
      }
    }
  }
  // H = 1/2: increments are white
  CHECK(ergolab::fgn_autocovariance(0.5, 0.25, 0) ==
        doctest::Approx(0.25).epsilon(1e-15));
  for (int k = 1; k <= 8; ++k)
    CHECK(std::abs(ergolab::fgn_autocovariance(0.5, 0.25, k)) <= 1e-15);
}

TEST_CASE("fbm embedding spectrum is nonnegative and inverts to the target") {
  const int n = 8, m = 2 * n;
  for (double h : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    FbmSpec spec;
    spec.hurst = h;
    spec.dt = 0.5;
    spec.steps = n;
    const FbmSampler sampler(spec);
    const auto& lam = sampler.eigenvalues();
    REQUIRE(static_cast<int>(lam.size()) == m);
    for (double l : lam) CHECK(l >= 0.0);
    // inverse transform recovers the increment covariance exactly
    const double pi = std::acos(-1.0);
    for (int lag = 0; lag <= n; ++lag) {
      double acc = 0.0;
      for (int j = 0; j < m; ++j)
        acc += lam[j] * std::cos(2.0 * pi * j * lag / m);
      acc /= m;
      const double want = ergolab::fgn_autocovariance(h, spec.dt, lag);
      CHECK(std::abs(acc - want) <= 1e-10 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("fbm sample covariance matches the exact law") {
  const int steps = 8, n = 100000;
  const double dt = 0.5;
  for (double h : {0.25, 0.5, 0.75}) {
    FbmSpec spec;
    spec.hurst = h;
    spec.dt = dt;
    spec.steps = steps;
    const FbmSampler sampler(spec);

    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(steps, steps);
    for (int i = 0; i < n; ++i) {
      const NoisePath p = sampler.sample(1, ergolab::child_seed(31u, i));
      for (int k = 0; k < steps; ++k)
        for (int l = 0; l <= k; ++l)
          second(k, l) += p.values(k + 1, 0) * p.values(l + 1, 0);
    }
    for (int k = 0; k < steps; ++k) {
      for (int l = 0; l <= k; ++l) {
        const double emp = second(k, l) / n;
        const double tk = (k + 1) * dt, tl = (l + 1) * dt;
        const double want = oracle::fbm_cov(h, tk, tl);
        const double ckk = oracle::fbm_cov(h, tk, tk);
        const double cll = oracle::fbm_cov(h, tl, tl);
        const double se = std::sqrt((ckk * cll + want * want) / n);
        CHECK(std::abs(emp - want) <= 3.5 * se);
      }
    }
  }
}

TEST_CASE("fbm determinism and coordinate streams") {
  FbmSpec spec;
  spec.hurst = 0.7;
  spec.dt = 0.125;
  spec.steps = 32;
  const NoisePath a = ergolab::sample_fbm(spec, 2, 5u);
  const NoisePath b = ergolab::sample_fbm(spec, 2, 5u);
  CHECK(a.generator_tag == "fbm");
  CHECK(same(a.values, b.values));
  CHECK_FALSE(same(a.values.col(0), a.values.col(1)));
  const NoisePath one = ergolab::sample_fbm(spec, 1, 5u);
  CHECK(same(a.values.col(0), one.values.col(0)));
  CHECK(a.values.row(0).norm() == 0.0);
}

TEST_CASE("fbm rejects invalid parameters") {
  FbmSpec spec;
  spec.hurst = 0.5;
  spec.dt = 0.1;
  spec.steps = 4;
  auto bad = spec;
  bad.hurst = 0.0;
  CHECK_THROWS_AS(ergolab::sample_fbm(bad, 1, 1u), std::invalid_argument);
  bad.hurst = 1.0;
  CHECK_THROWS_AS(ergolab::sample_fbm(bad, 1, 1u), std::invalid_argument);
  bad.hurst = 1.2;
  CHECK_THROWS_AS(ergolab::sample_fbm(bad, 1, 1u), std::invalid_argument);
  bad = spec;
  bad.steps = 0;
  CHECK_THROWS_AS(ergolab::sample_fbm(bad, 1, 1u), std::invalid_argument);
  bad = spec;
  bad.dt = 0.0;
  CHECK_THROWS_AS(ergolab::sample_fbm(bad, 1, 1u), std::invalid_argument);
  CHECK_THROWS_AS(ergolab::sample_fbm(spec, 0, 1u), std::invalid_argument);
}

TEST_CASE("moving-average kernel closed forms") {
  SUBCASE("flat kernel") {
    KernelSpec ks;
    ks.hurst = 0.5;
    ks.zeta = 3.0;
    ks.t0 = 1.0;
    const MovingAverageKernel k(ks);
    CHECK(k.tail_b() == doctest::Approx(0.0).epsilon(1e-15));
    for (double t : {0.1, 1.0, 7.0})
      CHECK(k.value(t) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(k.integral(4.5) == doctest::Approx(4.5).epsilon(1e-14));
    CHECK(k.square_integral(4.5) == doctest::Approx(4.5).epsilon(1e-14));
    CHECK(k.tail_stddev_bound(2.0, 10.0) == 0.0);
  }

  SUBCASE("power head with curvature tail") {
    KernelSpec ks;
    ks.hurst = 0.25;
    ks.zeta = 3.0;
    ks.t0 = 1.0;
    const MovingAverageKernel k(ks);
    // C1 match at t0: b = (H-1/2)/(2-zeta) t0^(H+zeta-5/2), a closes value
    CHECK(k.tail_b() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(k.tail_a() == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(k.value(2.0) == doctest::Approx(0.875).epsilon(1e-12));
    CHECK(k.value(0.0625) == doctest::Approx(2.0).epsilon(1e-12));
    const double head = k.integral(0.5);
    CHECK(head == doctest::Approx(std::pow(0.5, 0.75) / 0.75).epsilon(1e-12));
    const double quad = oracle::integrate(
        [&](double t) { return k.value(t); }, 0.5, 3.0, 1e-11);
    CHECK(k.integral(3.0) - k.integral(0.5) ==
          doctest::Approx(quad).epsilon(1e-9));
    const double quad2 = oracle::integrate(
        [&](double t) { return k.value(t) * k.value(t); }, 0.25, 4.0, 1e-11);
    CHECK(k.square_integral(4.0) - k.square_integral(0.25) ==
          doctest::Approx(quad2).epsilon(1e-9));
    // derivative continuity at the knot
    const double eps = 1e-6;
    const double num = (k.value(1.0 + eps) - k.value(1.0 - eps)) / (2 * eps);
    CHECK(num == doctest::Approx(-0.25).epsilon(1e-4));
  }

  SUBCASE("logarithmic tail at zeta = 2") {
    KernelSpec ks;
    ks.hurst = 0.25;
    ks.zeta = 2.0;
    ks.t0 = 2.0;
    const MovingAverageKernel k(ks);
    const double e = -0.25;
    const double b = e * std::pow(2.0, e);
    const double a = std::pow(2.0, e) - b * std::log(2.0);
    CHECK(k.tail_b() == doctest::Approx(b).epsilon(1e-12));
    CHECK(k.tail_a() == doctest::Approx(a).epsilon(1e-12));
    CHECK(k.value(5.0) ==
          doctest::Approx(a + b * std::log(5.0)).epsilon(1e-12));
    const double quad = oracle::integrate(
        [&](double t) { return k.value(t); }, 1.0, 6.0, 1e-11);
    CHECK(k.integral(6.0) - k.integral(1.0) ==
          doctest::Approx(quad).epsilon(1e-9));
    const double quad2 = oracle::integrate(
        [&](double t) { return k.value(t) * k.value(t); }, 1.0, 6.0, 1e-11);
    CHECK(k.square_integral(6.0) - k.square_integral(1.0) ==
          doctest::Approx(quad2).epsilon(1e-9));
    const double eps = 1e-6;
    const double num = (k.value(2.0 + eps) - k.value(2.0 - eps)) / (2 * eps);
    CHECK(num == doctest::Approx(e * std::pow(2.0, e - 1.0)).epsilon(1e-4));
  }

  SUBCASE("zeta = 5/2 - hurst keeps the pure power globally") {
    KernelSpec ks;
    ks.hurst = 0.75;
    ks.zeta = 1.75;
    ks.t0 = 1.0;
    const MovingAverageKernel k(ks);
    for (double t : {0.5, 1.0, 4.0, 50.0})
      CHECK(k.value(t) == doctest::Approx(std::pow(t, 0.25)).epsilon(1e-12));
  }
}

TEST_CASE("moving-average truncation estimate and control") {
  KernelSpec ks;
  ks.hurst = 0.25;
  ks.zeta = 3.0;
  ks.t0 = 1.0;
  const MovingAverageKernel k(ks);
  const double horizon = 4.0;
  const double tol = 1e-3 * std::sqrt(k.square_integral(horizon));
  const double rec = k.recommended_truncation(horizon, tol);
  CHECK(rec >= ks.t0);
  CHECK(k.tail_stddev_bound(rec, horizon) <= tol * (1.0 + 1e-9));
  CHECK(k.tail_stddev_bound(0.9 * rec, horizon) > tol);
  CHECK_THROWS_AS(k.tail_stddev_bound(0.5, horizon), std::invalid_argument);

  // doubling the truncation moves the path by at most the estimated tail
  const int steps = 64;
  const double dt = 1.0 / 16.0;
  auto a = ks;
  a.past_truncation = 50.0;
  auto b = ks;
  b.past_truncation = 100.0;
  const NoisePath pa = ergolab::sample_moving_average(a, steps, dt, 1, 44u);
  const NoisePath pb = ergolab::sample_moving_average(b, steps, dt, 1, 44u);
  const double bound = k.tail_stddev_bound(50.0, steps * dt);
  CHECK(bound > 0.0);
  for (int i = 0; i <= steps; ++i)
    CHECK(std::abs(pa.values(i, 0) - pb.values(i, 0)) <= 6.0 * bound);

  // a truncation whose neglected tail is too large is rejected outright
  auto tiny = ks;
  tiny.past_truncation = 1.0;
  CHECK_THROWS_AS(ergolab::sample_moving_average(tiny, steps, dt, 1, 44u),
                  std::invalid_argument);
}

TEST_CASE("moving-average identity kernel gives Brownian increments") {
  KernelSpec ks;
  ks.hurst = 0.5;
  const int steps = 32;
  const double dt = 0.125;
  const auto scheme = ergolab::build_ma_scheme(ks, steps, dt);
  CHECK(scheme.past_cells == 0);
  CHECK(scheme.w0 == doctest::Approx(std::sqrt(dt)).epsilon(1e-14));

  const NoisePath p = ergolab::sample_moving_average(ks, steps, dt, 1, 3u);
  CHECK(p.generator_tag == "moving_average");
  const NoisePath p2 = ergolab::sample_moving_average(ks, steps, dt, 1, 3u);
  CHECK(same(p.values, p2.values));
  auto deep = ks;
  deep.past_truncation = 10.0;
  const NoisePath p3 = ergolab::sample_moving_average(deep, steps, dt, 1, 3u);
  CHECK(same(p.values, p3.values));

  const int n = 20000;
  double s2 = 0.0, lag = 0.0;
  for (int i = 0; i < n; ++i) {
    const NoisePath w =
        ergolab::sample_moving_average(ks, 2, dt, 1, ergolab::child_seed(8u, i));
    const double d0 = w.values(1, 0), d1 = w.values(2, 0) - w.values(1, 0);
    s2 += d0 * d0;
    lag += d0 * d1;
  }
  CHECK(std::abs(s2 / n - dt) <= 3.5 * dt * std::sqrt(2.0 / n));
  CHECK(std::abs(lag / n) <= 3.5 * dt / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("moving-average power kernel reproduces the fbm law") {
  KernelSpec ks;
  ks.hurst = 0.75;
  ks.zeta = 1.75;  // 5/2 - hurst: globally the power kernel
  ks.t0 = 1.0;
  ks.past_truncation = 10000.0;
  const int steps = 16;
  const double dt = 0.125;
  const auto scheme = ergolab::build_ma_scheme(ks, steps, dt);
  CHECK(scheme.past_cells == 80000);

  const double norm = mvn_norm_sq(ks.hurst);
  for (int k = 1; k <= steps; ++k) {
    for (int l = 1; l <= k; ++l) {
      const double got = scheme_cov(scheme, k, l);
      const double want = oracle::fbm_cov(ks.hurst, k * dt, l * dt) / norm;
      CHECK(std::abs(got - want) <= 0.05 * want);
    }
  }
}

TEST_CASE("moving-average assembly matches a direct reconstruction") {
  KernelSpec ks;
  ks.hurst = 0.3;
  ks.zeta = 2.2;
  ks.t0 = 1.0;
  // one case below and one above the internal fft crossover
  for (int steps : {40, 600}) {
    ks.past_truncation = steps == 40 ? 60.0 : 2500.0;
    const double dt = 0.05;
    const auto s = ergolab::build_ma_scheme(ks, steps, dt);
    const std::uint64_t cs = ergolab::child_seed(91u, 0);
    ergolab::Rng fut(ergolab::child_seed(cs, 0));
    ergolab::Rng past(ergolab::child_seed(cs, 1));
    std::vector<double> xf(steps), xp(s.past_cells);
    for (double& x : xf) x = fut.normal();
    for (double& x : xp) x = past.normal();
    const NoisePath p = ergolab::sample_moving_average(ks, steps, dt, 1, 91u);
    for (int k : {1, steps / 2, steps}) {
      double want = xf[k - 1] * s.w0;
      for (int m = 1; m < k; ++m) want += xf[m - 1] * s.cell_integrals[k - m];
      for (int i = 0; i < s.past_cells; ++i)
        want += xp[i] * (s.cell_integrals[k + i] - s.cell_integrals[i]);
      CHECK(p.values(k, 0) == doctest::Approx(want).epsilon(1e-8));
    }
  }
}

TEST_CASE("fft convolution matches direct convolution") {
  ergolab::Rng rng(2024u);
  std::vector<double> a(37), b(23);
  for (double& x : a) x = rng.normal();
  for (double& x : b) x = rng.normal();
  const auto got = ergolab::fft_convolve(a, b);
  REQUIRE(got.size() == a.size() + b.size() - 1);
  for (std::size_t i = 0; i < got.size(); ++i) {
    double want = 0.0;
    for (std::size_t u = 0; u < a.size(); ++u)
      if (i >= u && i - u < b.size()) want += a[u] * b[i - u];
    CHECK(got[i] == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("moving-average increments are stationary in law") {
  KernelSpec ks;
  ks.hurst = 0.3;
  ks.zeta = 3.0;
  ks.t0 = 1.0;
  const int steps = 24;
  const double dt = 0.125;
  const int n = 10000;
  std::vector<double> early, late;
  early.reserve(n);
  late.reserve(n);
  for (int i = 0; i < n; ++i) {
    const NoisePath w = ergolab::sample_moving_average(
        ks, steps, dt, 1, ergolab::child_seed(12u, i));
    early.push_back(w.values(6, 0) - w.values(2, 0));
  }
  for (int i = 0; i < n; ++i) {
    const NoisePath w = ergolab::sample_moving_average(
        ks, steps, dt, 1, ergolab::child_seed(12u, n + i));
    late.push_back(w.values(20, 0) - w.values(16, 0));
  }
  const double d = oracle::ks_statistic(early, late);
  CHECK(d < oracle::ks_critical_1pct(n));
}

TEST_CASE("moving-average determinism and coordinate streams") {
  KernelSpec ks;
  ks.hurst = 0.35;
  ks.zeta = 2.5;
  ks.t0 = 0.5;
  const NoisePath a = ergolab::sample_moving_average(ks, 12, 0.25, 2, 17u);
  const NoisePath one = ergolab::sample_moving_average(ks, 12, 0.25, 1, 17u);
  CHECK(same(a.values.col(0), one.values.col(0)));
  CHECK_FALSE(same(a.values.col(0), a.values.col(1)));
}

TEST_CASE("kernel spec validation") {
  KernelSpec ks;
  auto bad = ks;
  bad.zeta = 1.5;
  CHECK_THROWS_AS(MovingAverageKernel{bad}, std::invalid_argument);
  bad = ks;
  bad.t0 = 0.0;
  CHECK_THROWS_AS(MovingAverageKernel{bad}, std::invalid_argument);
  bad = ks;
  bad.hurst = 0.0;
  CHECK_THROWS_AS(MovingAverageKernel{bad}, std::invalid_argument);
  bad = ks;
  bad.hurst = 1.2;
  CHECK_THROWS_AS(MovingAverageKernel{bad}, std::invalid_argument);
  CHECK_THROWS_AS(ergolab::sample_moving_average(ks, 0, 0.1, 1, 1u),
                  std::invalid_argument);
  CHECK_THROWS_AS(ergolab::sample_moving_average(ks, 4, -0.1, 1, 1u),
                  std::invalid_argument);
  CHECK_THROWS_AS(ergolab::sample_moving_average(ks, 4, 0.1, 0, 1u),
                  std::invalid_argument);
  // singular head stays integrable: first-cell weight has a closed form
  KernelSpec sing;
  sing.hurst = 0.25;
  const auto sch = ergolab::build_ma_scheme(sing, 2, 0.0625);
  CHECK(sch.w0 ==
        doctest::Approx(std::sqrt(2.0 * std::sqrt(0.0625))).epsilon(1e-12));
}
