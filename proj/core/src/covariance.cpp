#include "ergolab/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <stdexcept>
#include <variant>

#include "ergolab/noise.hpp"
#include "ergolab/rates.hpp"
#include "ergolab/rng.hpp"
#include "normal_detail.hpp"

namespace ergolab {

namespace {

void check_spec(const BivariateGaussianSpec& spec, const char* who) {
  if (!(spec.sigma_u > 0.0) || !std::isfinite(spec.sigma_u)) {
    throw std::invalid_argument(std::string(who) +
                                ": sigma_u must be positive and finite");
  }
  if (!(std::abs(spec.rho_cov) <= spec.sigma_u * spec.sigma_u)) {
    throw std::invalid_argument(
        std::string(who) + ": |rho_cov| cannot exceed the marginal variance");
  }
}

}  // namespace

bool BivariateGaussianSpec::hermite_applicable() const {
  return std::abs(rho_cov) <= 0.5;
}

BivariateGaussianSpec BivariateGaussianSpec::make(double sigma_u,
                                                  double rho_cov) {
  BivariateGaussianSpec spec{sigma_u, rho_cov};
  check_spec(spec, "bivariate gaussian spec");
  return spec;
}

double hermite_bound(const BivariateGaussianSpec& spec, double var_f,
                     double var_g) {
  check_spec(spec, "hermite_bound");
  if (!(var_f >= 0.0) || !(var_g >= 0.0)) {
    throw std::invalid_argument(
        "hermite_bound: variances must be nonnegative");
  }
  if (!spec.hermite_applicable()) {
    throw std::invalid_argument(
        "hermite_bound: the bound requires |Cov(U,V)| <= 1/2");
  }
  return 2.0 * std::sqrt(var_f * var_g) * std::abs(spec.rho_cov) /
         (spec.sigma_u * spec.sigma_u);
}

double FunctionTag::eval(double x) const {
  switch (kind) {
    case Kind::Indicator:
      return x <= threshold ? 1.0 : 0.0;
    case Kind::Identity:
      return x;
    case Kind::ClippedIdentity:
      return std::clamp(x, -1.0, 1.0);
  }
  return x;
}

std::string FunctionTag::name() const {
  switch (kind) {
    case Kind::Indicator: {
      char buf[48];
      std::snprintf(buf, sizeof buf, "indicator(%g)", threshold);
      return buf;
    }
    case Kind::Identity:
      return "identity";
    case Kind::ClippedIdentity:
      return "clipped-identity";
  }
  return "identity";
}

FunctionTag FunctionTag::indicator(double threshold) {
  if (!std::isfinite(threshold)) {
    throw std::invalid_argument("indicator: threshold must be finite");
  }
  return FunctionTag{Kind::Indicator, threshold};
}

FunctionTag FunctionTag::identity() { return FunctionTag{Kind::Identity, 0.0}; }

FunctionTag FunctionTag::clipped_identity() {
  return FunctionTag{Kind::ClippedIdentity, 0.0};
}

double catalog_variance(const FunctionTag& f, double sigma_u) {
  if (!(sigma_u > 0.0)) {
    throw std::invalid_argument("catalog_variance: sigma_u must be positive");
  }
  switch (f.kind) {
    case FunctionTag::Kind::Indicator: {
      const double p = detail::normal_cdf(f.threshold / sigma_u);
      return p * (1.0 - p);
    }
    case FunctionTag::Kind::Identity:
      return sigma_u * sigma_u;
    case FunctionTag::Kind::ClippedIdentity: {
      // E clamp(X,-1,1)^2 with X ~ N(0, sigma^2); the mean is zero by
      // symmetry. Split at |X| = 1: inside, the truncated second moment;
      // outside, the clamp contributes exactly 1.
      const double b = 1.0 / sigma_u;
      const double inside =
          sigma_u * sigma_u *
          ((2.0 * detail::normal_cdf(b) - 1.0) - 2.0 * b * detail::normal_pdf(b));
      const double outside = 2.0 * (1.0 - detail::normal_cdf(b));
      return inside + outside;
    }
  }
  return sigma_u * sigma_u;
}

CovarianceEstimate mc_covariance(const BivariateGaussianSpec& spec,
                                 const FunctionTag& f, const FunctionTag& g,
                                 int samples, std::uint64_t seed) {
  check_spec(spec, "mc_covariance");
  if (samples < 4) {
    throw std::invalid_argument(
        "mc_covariance: need at least 4 samples for a jackknife error");
  }
  const double corr = spec.rho_cov / (spec.sigma_u * spec.sigma_u);
  const double mix = std::sqrt(1.0 - corr * corr);
  Rng rng(seed);
  std::vector<double> fs(static_cast<std::size_t>(samples));
  std::vector<double> gs(static_cast<std::size_t>(samples));
  double sum_f = 0.0, sum_g = 0.0, sum_fg = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double u = spec.sigma_u * z1;
    const double v = spec.sigma_u * (corr * z1 + mix * z2);
    fs[static_cast<std::size_t>(i)] = f.eval(u);
    gs[static_cast<std::size_t>(i)] = g.eval(v);
    sum_f += fs[static_cast<std::size_t>(i)];
    sum_g += gs[static_cast<std::size_t>(i)];
    sum_fg += fs[static_cast<std::size_t>(i)] * gs[static_cast<std::size_t>(i)];
  }
  const double n = static_cast<double>(samples);
  CovarianceEstimate out;
  out.value = (sum_fg - sum_f * sum_g / n) / (n - 1.0);

  // Leave-one-out estimates from the same sums, then the usual jackknife
  // variance around their mean.
  std::vector<double> loo(static_cast<std::size_t>(samples));
  double loo_mean = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double fi = fs[static_cast<std::size_t>(i)];
    const double gi = gs[static_cast<std::size_t>(i)];
    const double m = n - 1.0;
    const double cov_i =
        (sum_fg - fi * gi - (sum_f - fi) * (sum_g - gi) / m) / (m - 1.0);
    loo[static_cast<std::size_t>(i)] = cov_i;
    loo_mean += cov_i;
  }
  loo_mean /= n;
  double ss = 0.0;
  for (const double v : loo) ss += (v - loo_mean) * (v - loo_mean);
  out.standard_error = std::sqrt((n - 1.0) / n * ss);
  return out;
}

double fou_covariance_asymptotic(double lambda, double sigma, double hurst,
                                 double tau) {
  if (!(lambda > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument(
        "fou_covariance_asymptotic: lambda and sigma must be positive");
  }
  if (!(hurst > 0.5) || !(hurst < 1.0)) {
    throw std::invalid_argument(
        "fou_covariance_asymptotic: the leading term needs hurst in (1/2,1); "
        "it vanishes at hurst <= 1/2");
  }
  if (!(tau >= 1.0)) {
    throw std::invalid_argument(
        "fou_covariance_asymptotic: the expansion holds for tau >= 1");
  }
  return sigma * sigma * hurst * (2.0 * hurst - 1.0) / (lambda * lambda) *
         std::pow(tau, 2.0 * hurst - 2.0);
}

std::vector<HermiteCheckRow> hermite_check_grid(double sigma_u,
                                                const std::vector<double>& rhos,
                                                int samples,
                                                std::uint64_t seed) {
  if (rhos.empty()) {
    throw std::invalid_argument("hermite_check_grid: empty rho grid");
  }
  const FunctionTag catalog[] = {FunctionTag::indicator(0.0),
                                 FunctionTag::identity(),
                                 FunctionTag::clipped_identity()};
  std::vector<HermiteCheckRow> rows;
  std::uint64_t cell = 0;
  for (const FunctionTag& f : catalog) {
    for (const FunctionTag& g : catalog) {
      for (const double rho : rhos) {
        const auto spec = BivariateGaussianSpec::make(sigma_u, rho);
        const CovarianceEstimate est =
            mc_covariance(spec, f, g, samples, child_seed(seed, cell));
        HermiteCheckRow row;
        row.f = f.name();
        row.g = g.name();
        row.rho = rho;
        row.estimate = est.value;
        row.standard_error = est.standard_error;
        row.bound = hermite_bound(spec, catalog_variance(f, sigma_u),
                                  catalog_variance(g, sigma_u));
        row.pass =
            std::abs(row.estimate) - 3.0 * row.standard_error <= row.bound;
        rows.push_back(std::move(row));
        ++cell;
      }
    }
  }
  return rows;
}

void write_hermite_report(const std::vector<HermiteCheckRow>& rows,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("write_hermite_report: cannot open " + path);
  }
  out << "f,g,rho,estimate,se,bound,pass\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", row.rho,
                  row.estimate, row.standard_error, row.bound);
    out << row.f << ',' << row.g << ',' << buf << ',' << (row.pass ? 1 : 0)
        << '\n';
  }
  if (!out) {
    throw std::runtime_error("write_hermite_report: write failed " + path);
  }
}

VarianceDecayReport variance_decay_check(const ProcessSpec& process,
                                         const std::vector<double>& thresholds,
                                         const std::vector<double>& times,
                                         int replications,
                                         std::uint64_t seed) {
  if (process.x0.size() != 1) {
    throw std::invalid_argument(
        "variance_decay_check: half-line sets need a one-dimensional process");
  }
  if (process.drift.tag() != "linear" ||
      process.diffusion.tag() != "constant") {
    throw std::invalid_argument(
        "variance_decay_check: the invariant law is only known in closed "
        "form for a linear drift with constant diffusion");
  }
  if (thresholds.empty()) {
    throw std::invalid_argument("variance_decay_check: no sets given");
  }
  if (times.size() < 2) {
    throw std::invalid_argument(
        "variance_decay_check: need at least two grid times");
  }
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0) || (k > 0 && !(times[k] > times[k - 1]))) {
      throw std::invalid_argument(
          "variance_decay_check: times must be positive and increasing");
    }
  }
  if (replications < 4) {
    throw std::invalid_argument(
        "variance_decay_check: need at least 4 replications");
  }
  if (!(process.dt > 0.0)) {
    throw std::invalid_argument("variance_decay_check: dt must be positive");
  }

  const double lambda = std::get<LinearDrift>(process.drift.kind).rate;
  const double sigma = process.diffusion.eval(process.x0)(0, 0);
  const double hurst = process.fractional ? process.hurst : 0.5;

  // Invariant law of the simulated chain itself: the explicit step is an
  // autoregression Y' = a Y + sigma dB with a = 1 - lambda dt, so the
  // stationary variance is an exact series in the increment autocovariance.
  // Centering at the chain's law, not the continuous one, keeps a grid-bias
  // plateau out of the measured decay.
  const double a_step = 1.0 - lambda * process.dt;
  if (!(std::abs(a_step) < 1.0)) {
    throw std::invalid_argument(
        "variance_decay_check: need lambda * dt < 2 for a stationary chain");
  }
  const double gamma0 = fgn_autocovariance(hurst, process.dt, 0);
  double series = gamma0;
  double weight = 1.0;
  for (int m = 1; m < 100000000; ++m) {
    weight *= a_step;
    series += 2.0 * weight * fgn_autocovariance(hurst, process.dt, m);
    if (std::abs(weight) * gamma0 < 1e-22 * std::abs(series)) break;
  }
  const double sd =
      sigma * std::sqrt(series / (1.0 - a_step * a_step));

  const auto sets = static_cast<int>(thresholds.size());
  const auto grid = static_cast<int>(times.size());
  std::vector<double> target_mass(static_cast<std::size_t>(sets));
  for (int j = 0; j < sets; ++j) {
    const double a = thresholds[static_cast<std::size_t>(j)];
    target_mass[static_cast<std::size_t>(j)] =
        std::isinf(a) ? (a > 0.0 ? 1.0 : 0.0) : detail::normal_cdf(a / sd);
  }

  // Index of the last grid state inside [0, t] for each window.
  std::vector<int> last_index(static_cast<std::size_t>(grid));
  for (int k = 0; k < grid; ++k) {
    last_index[static_cast<std::size_t>(k)] = static_cast<int>(
        std::floor(times[static_cast<std::size_t>(k)] / process.dt + 1e-9));
  }
  const int steps = last_index[static_cast<std::size_t>(grid - 1)];

  std::unique_ptr<FbmSampler> sampler;
  if (process.fractional) {
    sampler = std::make_unique<FbmSampler>(
        FbmSpec{process.hurst, process.dt, steps});
  }

  VarianceDecayReport report;
  report.thresholds = thresholds;
  report.times = times;
  report.mean_square = Eigen::MatrixXd::Zero(sets, grid);
  report.reference_exponent = std::min(2.0 - 2.0 * hurst, 1.0);

  for (int r = 0; r < replications; ++r) {
    const PathSample path =
        simulate_process(process, steps, child_seed(seed, r), process.x0,
                         sampler.get());
    for (int j = 0; j < sets; ++j) {
      const double a = thresholds[static_cast<std::size_t>(j)];
      int inside = 0;
      int k = 0;
      for (int i = 0; i <= steps && k < grid; ++i) {
        if (path.states(i, 0) <= a) ++inside;
        while (k < grid && last_index[static_cast<std::size_t>(k)] == i) {
          const double diff = static_cast<double>(inside) /
                                  static_cast<double>(i + 1) -
                              target_mass[static_cast<std::size_t>(j)];
          report.mean_square(j, k) += diff * diff;
          ++k;
        }
      }
    }
  }
  report.mean_square /= static_cast<double>(replications);

  // Pool the sets, then fit the pooled series when it carries signal.
  std::vector<double> pooled(static_cast<std::size_t>(grid), 0.0);
  bool positive = true;
  for (int k = 0; k < grid; ++k) {
    pooled[static_cast<std::size_t>(k)] =
        report.mean_square.col(k).mean();
    if (!(pooled[static_cast<std::size_t>(k)] > 0.0)) positive = false;
  }
  if (positive) {
    const RateFit fit = fit_rate(times, pooled);
    report.fitted_exponent = -fit.slope;
  } else {
    report.fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace ergolab
