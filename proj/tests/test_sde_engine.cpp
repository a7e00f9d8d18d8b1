#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ergolab/noise.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/sde.hpp"
#include "oracles.hpp"

#include <cmath>
#include <string>
#include <vector>

using ergolab::DiffusionSpec;
using ergolab::DriftSpec;
using ergolab::NoisePath;
using ergolab::PathSample;

namespace {

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a - b).cwiseAbs().maxCoeff() == 0.0;
}

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

NoisePath zero_noise(int steps, double dt, int dim) {
  NoisePath p;
  p.times.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) p.times[k] = k * dt;
  p.values = Eigen::MatrixXd::Zero(steps + 1, dim);
  p.generator_tag = "zero";
  return p;
}

NoisePath coarsen(const NoisePath& fine, int factor) {
  const int n = fine.steps() / factor;
  NoisePath c;
  c.times.resize(n + 1);
  c.values = Eigen::MatrixXd(n + 1, fine.dim());
  for (int k = 0; k <= n; ++k) {
    c.times[k] = fine.times[k * factor];
    c.values.row(k) = fine.values.row(k * factor);
  }
  c.generator_tag = fine.generator_tag;
  return c;
}

// Exact OU solution driven by the same Brownian path, with the stochastic
// integral evaluated by the midpoint exponential on the fine grid. The
// O(dt_f^2) quadrature error is far below the Euler errors under test.
std::vector<double> ou_reference(const NoisePath& fine, double lambda,
                                 double sigma, double x0) {
  const double dtf = fine.dt();
  const double decay = std::exp(-lambda * dtf);
  const double half = std::exp(-0.5 * lambda * dtf);
  std::vector<double> r(fine.steps() + 1);
  r[0] = x0;
  for (int k = 0; k < fine.steps(); ++k) {
    const double dw = fine.values(k + 1, 0) - fine.values(k, 0);
    r[k + 1] = r[k] * decay + sigma * half * dw;
  }
  return r;
}

}  // namespace

TEST_CASE("zero drift and zero diffusion hold the path fixed") {
  Eigen::VectorXd v(3);
  v << 1.0, -2.0, 0.5;
  const DriftSpec still = DriftSpec::custom(
      [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()).eval(); },
      0.0);
  const PathSample p =
      ergolab::euler_maruyama(still, DiffusionSpec::zero(3), v, 0.25, 8, 7u);
  for (int k = 0; k <= 8; ++k)
    CHECK((p.states.row(k).transpose() - v).norm() == 0.0);
}

TEST_CASE("noiseless linear drift follows the exponential decay") {
  const DriftSpec drift = DriftSpec::linear(1.0);
  const double dt = std::pow(2.0, -10);
  const int steps = 1024;
  const PathSample p = ergolab::euler_maruyama(
      drift, DiffusionSpec::zero(1), vec1(1.0), dt, steps, 1u);
  CHECK(std::abs(p.states(steps, 0) - std::exp(-1.0)) < 1e-2);

  const PathSample q = ergolab::integrate_additive(
      drift, Eigen::MatrixXd::Identity(1, 1), vec1(1.0),
      zero_noise(steps, dt, 1));
  CHECK(std::abs(q.states(steps, 0) - std::exp(-1.0)) < 1e-2);
  CHECK(same(p.states, q.states));
}

TEST_CASE("ou variance matches the stationary law") {
  const double lambda = 1.0, sigma = std::sqrt(2.0);
  const double dt = std::pow(2.0, -8), t = 5.0;
  const int steps = static_cast<int>(t / dt);
  const DriftSpec drift = DriftSpec::linear(lambda);
  const DiffusionSpec diff = DiffusionSpec::scalar(1, sigma);
  const int n = 10000;
  const double want = 1.0 - std::exp(-2.0 * lambda * t);  // sigma^2/(2 lambda) = 1
  double s2 = 0.0, s4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const PathSample p = ergolab::euler_maruyama(drift, diff, vec1(0.0), dt,
                                                 steps, ergolab::child_seed(4u, i));
    const double x = p.states(steps, 0);
    s2 += x * x;
    s4 += x * x * x * x;
  }
  const double emp = s2 / n;
  const double se = std::sqrt((s4 / n - emp * emp) / n);
  CHECK(std::abs(emp - want) <= 3.0 * se);
}

TEST_CASE("euler error halves with the step size") {
  const double lambda = 2.0, sigma = 0.5, x0 = 1.5, t = 2.0;
  const int fine_steps = 2048;  // dt_f = 2^-10
  const double dtf = t / fine_steps;
  const DriftSpec drift = DriftSpec::linear(lambda);
  const DiffusionSpec diff = DiffusionSpec::scalar(1, sigma);

  double err_coarse = 0.0, err_half = 0.0;
  const int reps = 16;
  for (int r = 0; r < reps; ++r) {
    const NoisePath fine =
        ergolab::sample_brownian(fine_steps, dtf, 1, ergolab::child_seed(6u, r));
    const std::vector<double> ref = ou_reference(fine, lambda, sigma, x0);

    for (int factor : {64, 32}) {
      const NoisePath sub = coarsen(fine, factor);
      const PathSample p = ergolab::euler_maruyama(
          drift, diff, vec1(x0), dtf * factor, fine_steps / factor, sub);
      double e = 0.0;
      for (int k = 0; k <= p.steps(); ++k)
        e = std::max(e, std::abs(p.states(k, 0) - ref[k * factor]));
      (factor == 64 ? err_coarse : err_half) += e;
    }
  }
  const double ratio = err_coarse / err_half;
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 2.5);
}

TEST_CASE("stationary moments stay near the gaussian target") {
  // Linear(1) with sigma = sqrt(2): invariant law N(0,1)
  const double dt = std::pow(2.0, -6), t = 5.0;
  const int steps = static_cast<int>(t / dt);
  const DriftSpec drift = DriftSpec::linear(1.0);
  const DiffusionSpec diff = DiffusionSpec::scalar(1, std::sqrt(2.0));
  const int n = 4000;
  const std::vector<int> checkpoints = {steps / 4, steps / 2, steps};
  const std::vector<double> qs = {2.0, 4.0, 8.0};
  const std::vector<double> targets = {1.0, 3.0, 105.0};

  std::vector<std::vector<double>> samples(checkpoints.size());
  ergolab::Rng init(2718u);
  for (int i = 0; i < n; ++i) {
    const PathSample p = ergolab::euler_maruyama(
        drift, diff, vec1(init.normal()), dt, steps, ergolab::child_seed(9u, i));
    for (std::size_t c = 0; c < checkpoints.size(); ++c)
      samples[c].push_back(p.states(checkpoints[c], 0));
  }
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    for (std::size_t j = 0; j < qs.size(); ++j) {
      double m = 0.0, m2 = 0.0;
      for (double x : samples[c]) {
        const double v = std::pow(std::abs(x), qs[j]);
        m += v;
        m2 += v * v;
      }
      m /= n;
      m2 /= n;
      const double se = std::sqrt(std::max(m2 - m * m, 0.0) / n);
      CHECK(std::abs(m - targets[j]) <= 3.5 * se);
    }
  }
}

TEST_CASE("preconditions and divergence") {
  const DriftSpec drift = DriftSpec::linear(4.0);
  const DiffusionSpec diff = DiffusionSpec::zero(1);

  // stability gate for linear drift
  CHECK_THROWS_AS(
      ergolab::euler_maruyama(drift, diff, vec1(1.0), 0.3, 4, 1u),
      std::invalid_argument);

  // noise grid must match
  const NoisePath n8 = zero_noise(8, 0.125, 1);
  CHECK_THROWS_AS(ergolab::euler_maruyama(DriftSpec::linear(1.0), diff,
                                          vec1(1.0), 0.125, 4, n8),
                  std::invalid_argument);
  CHECK_THROWS_AS(ergolab::euler_maruyama(DriftSpec::linear(1.0), diff,
                                          vec1(1.0), 0.25, 8, n8),
                  std::invalid_argument);

  // divergence reports the step index
  const DriftSpec unstable = DriftSpec::custom(
      [](const Eigen::VectorXd& x) {
        return (x.squaredNorm() * x).eval();
      },
      1.0);
  bool thrown = false;
  try {
    ergolab::euler_maruyama(unstable, diff, vec1(2.0), 0.5, 64, 1u);
  } catch (const std::runtime_error& e) {
    thrown = true;
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
  CHECK(thrown);

  // non-finite drift output is divergence too, not a NaN path
  const DriftSpec broken = DriftSpec::custom(
      [](const Eigen::VectorXd& x) {
        return (x * std::numeric_limits<double>::quiet_NaN()).eval();
      },
      1.0);
  CHECK_THROWS_AS(ergolab::euler_maruyama(broken, diff, vec1(1.0), 0.1, 4, 1u),
                  std::runtime_error);

  // additive integrator wants a square invertible matrix
  Eigen::MatrixXd sing(2, 2);
  sing << 1.0, 1.0, 1.0, 1.0;
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(ergolab::integrate_additive(DriftSpec::linear(1.0), sing, x0,
                                              zero_noise(4, 0.1, 2)),
                  std::invalid_argument);
}

TEST_CASE("additive integration is reusable and driver-agnostic") {
  ergolab::FbmSpec fspec;
  fspec.hurst = 0.5;
  fspec.dt = 0.0625;
  fspec.steps = 64;
  const NoisePath g = ergolab::sample_fbm(fspec, 1, 77u);
  const DriftSpec drift = DriftSpec::linear(0.8);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(1, 1) * 1.3;

  const PathSample a = ergolab::integrate_additive(drift, sigma, vec1(0.4), g);
  const PathSample b = ergolab::integrate_additive(drift, sigma, vec1(0.4), g);
  CHECK(same(a.states, b.states));
  CHECK(a.noise_tag == "fbm");

  // same driving path through the general stepper gives the same output
  const PathSample c = ergolab::euler_maruyama(
      drift, DiffusionSpec::constant(sigma), vec1(0.4), fspec.dt, fspec.steps, g);
  CHECK(same(a.states, c.states));
}

TEST_CASE("drift catalog formulas") {
  SUBCASE("linear") {
    const DriftSpec d = DriftSpec::linear(2.5);
    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 4.0;
    CHECK((d(x) + 2.5 * x).norm() == 0.0);
    CHECK(d.tag() == "linear");
  }

  SUBCASE("double well matches its potential gradient") {
    const double lnc = 1.5, kap = 2.0, R = 1.25;
    const DriftSpec d = DriftSpec::double_well(lnc, kap, R);
    auto pot = [&](const Eigen::VectorXd& x) {
      const double r2 = x.squaredNorm();
      return (kap + lnc) * r2 * r2 / (4.0 * R * R) - 0.5 * lnc * r2;
    };
    Eigen::VectorXd x(2);
    x << 0.7, -0.3;
    const Eigen::VectorXd b = d(x);
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += 1e-6;
      xm(i) -= 1e-6;
      const double grad = (pot(xp) - pot(xm)) / 2e-6;
      CHECK(b(i) == doctest::Approx(-grad).epsilon(1e-7));
    }
    // explicit closed form
    const double coef = (kap + lnc) * x.squaredNorm() / (R * R) - lnc;
    CHECK((b + coef * x).norm() <= 1e-14);

    // zero radius collapses to the linear field
    const DriftSpec flat = DriftSpec::double_well(0.0, 3.0, 0.0);
    CHECK((flat(x) + 3.0 * x).norm() == 0.0);
    CHECK_THROWS_AS(DriftSpec::double_well(1.0, 1.0, 0.0),
                    std::invalid_argument);
  }

  SUBCASE("weak mean reversion outside the cap") {
    const double a = 0.5, al = 1.2, M = 0.5;
    const DriftSpec d = DriftSpec::weak_mean_reverting(a, al, M);
    Eigen::VectorXd x(2);
    x << 1.5, -2.0;
    const double r = x.norm();
    CHECK(x.dot(d(x)) ==
          doctest::Approx(-al * std::pow(r, 2.0 * a)).epsilon(1e-12));

    // C1 blend: value and radial slope agree across |x| = M
    Eigen::VectorXd u(2);
    u << 1.0, 0.0;
    auto radial = [&](double rr) { return d((rr * u).eval())(0); };
    CHECK(radial(M - 1e-9) == doctest::Approx(radial(M + 1e-9)).epsilon(1e-6));
    const double in = (radial(M - 1e-5) - radial(M - 3e-5)) / 2e-5;
    const double out = (radial(M + 3e-5) - radial(M + 1e-5)) / 2e-5;
    CHECK(in == doctest::Approx(out).epsilon(1e-3));
    CHECK(d(Eigen::VectorXd::Zero(2)).norm() == 0.0);

    CHECK_THROWS_AS(DriftSpec::weak_mean_reverting(0.5, 1.0, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(DriftSpec::weak_mean_reverting(0.0, 1.0, 0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(DriftSpec::weak_mean_reverting(1.2, 1.0, 0.5),
                    std::invalid_argument);
    // a = 1 is globally linear, no cap needed
    const DriftSpec lin = DriftSpec::weak_mean_reverting(1.0, 0.7, 0.0);
    CHECK((lin(x) + 0.7 * x).norm() <= 1e-14);
  }
}

TEST_CASE("drift condition report") {
  SUBCASE("linear drift is globally contracting") {
    const auto rep = ergolab::check_drift_conditions(DriftSpec::linear(1.0),
                                                     2.0, 3, 2000, 4.0, 11u);
    CHECK(rep.contraction_holds);
    CHECK(rep.kappa == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.radius == 0.0);
    CHECK(rep.lambda == 0.0);
    CHECK(rep.hajek_holds);
    CHECK(rep.hajek_kappa_bar == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(rep.hajek_kappa_low) <= 1e-6);

    const auto rep2 = ergolab::check_drift_conditions(DriftSpec::linear(1.0),
                                                      2.0, 3, 2000, 4.0, 11u);
    CHECK(rep2.kappa == rep.kappa);
    CHECK(rep2.hajek_kappa_bar == rep.hajek_kappa_bar);
  }

  SUBCASE("double well is contracting outside a positive radius") {
    const DriftSpec d = DriftSpec::double_well(1.0, 2.0, 1.0);
    const auto rep = ergolab::check_drift_conditions(d, 2.0, 2, 4000, 3.0, 13u);
    CHECK(rep.contraction_holds);
    CHECK(rep.kappa > 0.0);
    CHECK(rep.radius > 0.0);
    CHECK(rep.radius <= 1.0);
    CHECK(rep.lambda > 0.0);   // the nonconvex core expands pairs
    CHECK(rep.lambda <= 1.0 + 1e-9);
    CHECK(rep.hajek_holds);
  }

  SUBCASE("expanding drift is reported, not asserted") {
    const DriftSpec bad = DriftSpec::custom(
        [](const Eigen::VectorXd& x) { return (0.5 * x).eval(); }, 0.5);
    const auto rep = ergolab::check_drift_conditions(bad, 2.0, 2, 500, 2.0, 17u);
    CHECK_FALSE(rep.contraction_holds);
    CHECK_FALSE(rep.hajek_holds);
    CHECK(rep.violation_x.size() == 2);
    CHECK(rep.violation_rate == doctest::Approx(0.5).epsilon(1e-9));
  }

  SUBCASE("weak mean reversion satisfies its own radial bound") {
    const double a = 0.5, al = 0.9, M = 0.4;
    const DriftSpec d = DriftSpec::weak_mean_reverting(a, al, M);
    ergolab::Rng rng(23u);
    int checked = 0;
    while (checked < 1000) {
      Eigen::VectorXd x(3);
      for (int i = 0; i < 3; ++i) x(i) = 2.0 * rng.normal();
      if (x.norm() <= M) continue;
      ++checked;
      CHECK(x.dot(d(x)) <= -al * std::pow(x.norm(), 2.0 * a) + 1e-12);
    }
  }

  CHECK_THROWS_AS(ergolab::check_drift_conditions(DriftSpec::linear(1.0), 0.5,
                                                  2, 100, 1.0, 1u),
                  std::invalid_argument);
  CHECK_THROWS_AS(ergolab::check_drift_conditions(DriftSpec::linear(1.0), 2.0,
                                                  2, 1, 1.0, 1u),
                  std::invalid_argument);
}

TEST_CASE("state dependent diffusion and ellipticity floor") {
  // sigma(x) = sqrt(1 + 0.2 |x|) on the diagonal keeps the floor at 1
  const DiffusionSpec diff = DiffusionSpec::state_dependent(
      [](const Eigen::VectorXd& x) {
        const double s = std::sqrt(1.0 + 0.2 * x.norm());
        return (s * Eigen::MatrixXd::Identity(x.size(), x.size())).eval();
      },
      0.5, 1.0);
  const PathSample p = ergolab::euler_maruyama(
      DriftSpec::linear(1.0), diff, vec1(0.5), 0.01, 200, 21u);
  CHECK(p.steps() == 200);
  CHECK(p.diffusion_tag == "state");

  // a floor the matrix cannot reach is flagged during integration
  const DiffusionSpec thin = DiffusionSpec::state_dependent(
      [](const Eigen::VectorXd& x) {
        return (0.1 * Eigen::MatrixXd::Identity(x.size(), x.size())).eval();
      },
      0.5, 1.0);
  CHECK_THROWS_AS(ergolab::euler_maruyama(DriftSpec::linear(1.0), thin,
                                          vec1(0.5), 0.01, 10, 21u),
                  std::runtime_error);
}
