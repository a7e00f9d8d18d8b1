#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergolab/sde.hpp"

namespace ergolab {

// A centered bivariate Gaussian pair (U, V) with equal marginal variances
// sigma_u^2 and raw covariance rho_cov. The covariance bound below only
// applies when |rho_cov| <= 1/2; hermite_applicable flags that, the
// constructor does not enforce it.
struct BivariateGaussianSpec {
  double sigma_u = 1.0;
  double rho_cov = 0.0;

  bool hermite_applicable() const;

  static BivariateGaussianSpec make(double sigma_u, double rho_cov);
};

// Bound on |Cov(f(U), g(V))| for square-integrable f, g:
//   2 sqrt(var_f var_g) |Cov(U,V)| / sigma_u^2,
// valid whenever |Cov(U,V)| <= 1/2. Out of that range the bound does not
// hold and the call is an error.
double hermite_bound(const BivariateGaussianSpec& spec, double var_f,
                     double var_g);

// Closed catalog of test functions for the Monte Carlo verifier. Keeping the
// catalog fixed means exact variances and covariances are available for
// every member, so the checks compare against known values rather than
// estimates of estimates.
struct FunctionTag {
  enum class Kind { Indicator, Identity, ClippedIdentity };
  Kind kind = Kind::Identity;
  double threshold = 0.0;  // indicator of (-inf, threshold]

  double eval(double x) const;
  std::string name() const;

  static FunctionTag indicator(double threshold);
  static FunctionTag identity();
  static FunctionTag clipped_identity();  // clamp to [-1, 1]
};

// Var f(U) for U ~ N(0, sigma_u^2), in closed form for each catalog member.
double catalog_variance(const FunctionTag& f, double sigma_u);

struct CovarianceEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

// Unbiased Monte Carlo estimate of Cov(f(U), g(V)) with a jackknife standard
// error. The pair is drawn by exact linear mixing of two independent
// standard normals, so the target covariance is exact by construction.
CovarianceEstimate mc_covariance(const BivariateGaussianSpec& spec,
                                 const FunctionTag& f, const FunctionTag& g,
                                 int samples, std::uint64_t seed);

// Leading term of the stationary covariance of the fractionally driven
// linear process at lag tau >= 1:
//   sigma^2 H (2H - 1) lambda^{-2} tau^{2H - 2}.
// Only meaningful for hurst > 1/2; the term vanishes at 1/2 and the
// expansion does not apply below.
double fou_covariance_asymptotic(double lambda, double sigma, double hurst,
                                 double tau);

// One row of the covariance-bound verification grid.
struct HermiteCheckRow {
  std::string f, g;
  double rho = 0.0;
  double estimate = 0.0;
  double standard_error = 0.0;
  double bound = 0.0;
  bool pass = false;  // |estimate| - 3 SE <= bound
};

// Runs mc_covariance for every ordered pair from the catalog
// {indicator(0), identity, clipped-identity} and every covariance in rhos,
// at marginal deviation sigma_u. Each cell draws `samples` pairs from a
// child seed of `seed`.
std::vector<HermiteCheckRow> hermite_check_grid(double sigma_u,
                                                const std::vector<double>& rhos,
                                                int samples,
                                                std::uint64_t seed);

// CSV with header f,g,rho,estimate,se,bound,pass.
void write_hermite_report(const std::vector<HermiteCheckRow>& rows,
                          const std::string& path);

// Decay of E |nu_t(A) - nu(A)|^2 for half-line sets A = (-inf, a], measured
// over independent replications of the process and compared against the
// reference exponent (2 - 2H) ^ 1 (Brownian driving counts as H = 1/2).
// The invariant nu must be known in closed form, so the process is required
// to have a linear drift and constant scalar diffusion in dimension one.
struct VarianceDecayReport {
  std::vector<double> thresholds;
  std::vector<double> times;
  Eigen::MatrixXd mean_square;     // thresholds x times
  double fitted_exponent = 0.0;    // NaN when every entry is zero
  double reference_exponent = 0.0;
};

VarianceDecayReport variance_decay_check(const ProcessSpec& process,
                                         const std::vector<double>& thresholds,
                                         const std::vector<double>& times,
                                         int replications, std::uint64_t seed);

}  // namespace ergolab
