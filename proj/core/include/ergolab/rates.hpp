#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>

namespace ergolab {

// Inputs of the abstract convergence-rate table. The bound assumes the
// occupation measure of the process concentrates on sets A at speed
//   E|nu_t(A) - nu(A)| <= K min(pi_t(A), pi_t(A)^beta / t^gamma)
// with finite q-th moments of the comparison family pi_t.
struct RegimeInput {
  double p = 1.0;     // Wasserstein order, > 0
  double q = 2.0;     // available moment order, > p
  int d = 1;          // state dimension, >= 1
  double beta = 0.5;  // concentration exponent, in (0, 1/2]
  double gamma = 0.5; // time-decay exponent, in (0, 1/2]
};

// One evaluated cell of a rate table. `exponent` is the decay exponent of t
// (value e means the bound decays like t^-e). Which functional it applies to
// (E W_p^p or the L^p norm ||W_p||_p) is documented per function.
struct RateResult {
  double exponent = 0.0;
  bool log_factor = false;  // a log(1+t) factor multiplies the power
  bool boundary = false;    // input sits on a case boundary; the smaller
                            // adjacent exponent is returned
  bool strict = false;      // exponent is approached but not attained
                            // (reads "exponent - eps" for every eps > 0)
  std::string regime;       // branch condition that fired, human-readable
};

// Decay exponent of E W_p^p(nu_t, nu) under the abstract assumption.
// Three rows split on p vs d(1-beta); each row splits on p/q.
RateResult abstract_rate(const RegimeInput& in);

// Decay exponent of ||W_p(nu_t, nu)||_p when moments of every order q > p/beta
// are available (so the small-ratio branch always fires).
RateResult limit_rate_wp(double p, int d, double beta, double gamma);

// Decay exponent of E W_p^p for processes with conditional-mixing control
// only (no Markov/spectral structure): beta is tied to q via
// beta(q) = (1 - 1/q)/2 and the comparison family is (nu_t + nu)/2.
// Rows split on p vs (d/2)(1 + 1/q). Requires q > max(1, p).
RateResult nonmarkov_rate(double p, double q, int d, double gamma);

// q -> infinity shorthand of nonmarkov_rate for ||W_p||_p:
// exponent 2*gamma*min(1/(2p), 1/d), the 1/d branch strict.
RateResult nonmarkov_limit(double p, int d, double gamma);

// Dimension thresholds (d_minus, d_plus) entering the critical row of
// nonmarkov_rate: q > d_minus is implied by q > p there, and the indicator
// p/q < beta(q) rewrites as q > d_plus.
std::pair<double, double> d_thresholds(int d);

// Decay exponent of E W_p^p for reversible diffusions with a spectral gap
// (beta = gamma = 1/2 hardwired, written out as its own table so it can be
// cross-checked against abstract_rate).
RateResult poincare_rate(double p, double q, int d);

// Decay exponent of ||W_p||_p for additive Gaussian-noise SDEs whose kernel
// second derivative decays like u^-zeta, zeta > 3/2. If `hurst` is given the
// kernel is the fractional one and zeta = 5/2 - hurst is derived (pass
// zeta = 0 or the consistent value). eps > 0 is the sacrificed order.
RateResult fractional_rate(double zeta, std::optional<double> hurst, double p,
                           int d, double eps);

// Decay exponent of ||W_p||_p for the 1-d linear-drift equation driven by
// fractional noise with Hurst index hurst in (0,1): (1/p) min(1/2, 1-hurst),
// attained (no eps).
RateResult fou_rate(double hurst, double p);

// Least-squares power-law fit of v ~ C * t^slope on log-log scale.
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;    // log C
  double residual_se = 0.0;  // sqrt(SSR / (n-2))
  double slope_se = 0.0;
};
RateFit fit_rate(std::span<const double> t, std::span<const double> v);

}  // namespace ergolab
