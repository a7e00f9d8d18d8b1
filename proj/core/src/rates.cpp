#include "ergolab/rates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ergolab {

namespace {

// Case boundaries are measure-zero in parameter space; inputs landing on one
// within this tolerance are reported with boundary=true and the smaller
// adjacent exponent, never an error.
bool near(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

RateResult make(double exponent, const char* regime, bool log_factor = false,
                bool boundary = false, bool strict = false) {
  RateResult r;
  r.exponent = exponent;
  r.log_factor = log_factor;
  r.boundary = boundary;
  r.strict = strict;
  r.regime = regime;
  return r;
}

void check_common(double p, double q, int d, double beta, double gamma) {
  if (!(p > 0.0)) throw std::invalid_argument("rate table: p must be > 0");
  if (!(q > p)) throw std::invalid_argument("rate table: q must exceed p");
  if (d < 1) throw std::invalid_argument("rate table: d must be >= 1");
  if (!(beta > 0.0 && beta <= 0.5))
    throw std::invalid_argument("rate table: beta must lie in (0, 1/2]");
  if (!(gamma > 0.0 && gamma <= 0.5))
    throw std::invalid_argument("rate table: gamma must lie in (0, 1/2]");
}

}  // namespace

RateResult abstract_rate(const RegimeInput& in) {
  check_common(in.p, in.q, in.d, in.beta, in.gamma);
  const double p = in.p, q = in.q, beta = in.beta, gamma = in.gamma;
  const double d = static_cast<double>(in.d);
  const double s = d * (1.0 - beta);  // row threshold
  const double ratio = p / q;
  const double large_ratio_exp = gamma * (q - p) / (q * (1.0 - beta));

  if (near(p, s)) {
    if (near(ratio, beta))
      return make(gamma, "p=d(1-beta), p/q=beta", true, true);
    if (ratio < beta) return make(gamma, "p=d(1-beta), p/q<beta", true);
    return make(large_ratio_exp, "p=d(1-beta), p/q>beta");
  }
  if (p < s) {
    const double thr = d / (d + q);
    const double small_ratio_exp = gamma * p / s;
    if (near(ratio, thr))
      return make(std::min(small_ratio_exp, large_ratio_exp),
                  "p<d(1-beta), p/q=d/(d+q)", true, true);
    if (ratio < thr) return make(small_ratio_exp, "p<d(1-beta), p/q<d/(d+q)");
    return make(large_ratio_exp, "p<d(1-beta), p/q>d/(d+q)");
  }
  if (near(ratio, beta))
    return make(gamma, "p>d(1-beta), p/q=beta", true, true);
  if (ratio < beta) return make(gamma, "p>d(1-beta), p/q<beta");
  return make(large_ratio_exp, "p>d(1-beta), p/q>beta");
}

RateResult limit_rate_wp(double p, int d, double beta, double gamma) {
  check_common(p, p + 1.0, d, beta, gamma);  // q plays no role here
  const double s = static_cast<double>(d) * (1.0 - beta);
  if (near(p, s)) return make(gamma / p, "p=d(1-beta), log^(1/p) factor", true);
  if (p < s) return make(gamma / s, "p<d(1-beta)");
  return make(gamma / p, "p>d(1-beta)");
}

RateResult nonmarkov_rate(double p, double q, int d, double gamma) {
  if (!(p > 0.0)) throw std::invalid_argument("rate table: p must be > 0");
  if (!(q > 1.0 && q > p))
    throw std::invalid_argument("rate table: q must exceed max(1, p)");
  if (d < 1) throw std::invalid_argument("rate table: d must be >= 1");
  if (!(gamma > 0.0 && gamma <= 0.5))
    throw std::invalid_argument("rate table: gamma must lie in (0, 1/2]");

  const double dd = static_cast<double>(d);
  const double s = 0.5 * dd * (1.0 + 1.0 / q);
  const double small_p_exp = 2.0 * gamma * p * q / ((q + 1.0) * dd);
  const double large_p_exp = 2.0 * gamma * (q - p) / (q + 1.0);

  if (near(p, s)) {
    const double dplus = d_thresholds(d).second;
    if (near(q, dplus))
      return make(gamma, "p=(d/2)(1+1/q), q=d_plus", true, true);
    if (q < dplus) return make(large_p_exp, "p=(d/2)(1+1/q), q<d_plus");
    return make(gamma, "p=(d/2)(1+1/q), q>d_plus", true);
  }
  if (p < s) {
    const double lo = dd * q / (dd + q);   // below: small-p branch
    const double hi = dd * q / (q + 1.0);  // above: large-p branch
    if (p < lo && !near(p, lo))
      return make(small_p_exp, "p<(d/2)(1+1/q), p<dq/(d+q)");
    if (p > hi && !near(p, hi))
      return make(large_p_exp, "p<(d/2)(1+1/q), p>dq/(q+1)");
    // Strip dq/(d+q) <= p <= dq/(q+1) not covered by either indicator
    // (nonempty for d >= 2); report the smaller adjacent exponent.
    return make(std::min(small_p_exp, large_p_exp),
                "p<(d/2)(1+1/q), dq/(d+q)<=p<=dq/(q+1) strip", true, true);
  }
  const double cr = 0.5 * (q - 1.0);
  if (near(p, cr)) return make(gamma, "p>(d/2)(1+1/q), p=(q-1)/2", true, true);
  if (p < cr) return make(gamma, "p>(d/2)(1+1/q), p<(q-1)/2");
  return make(large_p_exp, "p>(d/2)(1+1/q), p>(q-1)/2");
}

RateResult nonmarkov_limit(double p, int d, double gamma) {
  if (!(p > 0.0)) throw std::invalid_argument("rate table: p must be > 0");
  if (d < 1) throw std::invalid_argument("rate table: d must be >= 1");
  if (!(gamma > 0.0 && gamma <= 0.5))
    throw std::invalid_argument("rate table: gamma must lie in (0, 1/2]");
  const double half_d = 0.5 * static_cast<double>(d);
  if (p > half_d && !near(p, half_d))
    return make(gamma / p, "p>d/2, exponent 2*gamma/(2p)");
  return make(2.0 * gamma / static_cast<double>(d),
              "p<=d/2, exponent 2*gamma/d not attained", false, false, true);
}

std::pair<double, double> d_thresholds(int d) {
  if (d < 1) throw std::invalid_argument("d_thresholds: d must be >= 1");
  const double dd = static_cast<double>(d);
  const double dminus = (dd + std::sqrt(dd * dd + 8.0 * dd)) / 4.0;
  const double dplus =
      (dd + 1.0 + std::sqrt((dd + 1.0) * (dd + 1.0) + 4.0 * dd)) / 2.0;
  return {dminus, dplus};
}

RateResult poincare_rate(double p, double q, int d) {
  check_common(p, q, d, 0.5, 0.5);
  const double dd = static_cast<double>(d);
  const double half_d = 0.5 * dd;
  const double ratio = p / q;
  const double large_ratio_exp = 1.0 - ratio;

  if (near(p, half_d)) {
    if (near(ratio, 0.5)) return make(0.5, "p=d/2, p/q=1/2", true, true);
    if (ratio < 0.5) return make(0.5, "p=d/2, p/q<1/2", true);
    return make(large_ratio_exp, "p=d/2, p/q>1/2");
  }
  if (p < half_d) {
    const double thr = dd / (dd + q);
    if (near(ratio, thr))
      return make(std::min(p / dd, large_ratio_exp), "p<d/2, p/q=d/(d+q)",
                  true, true);
    if (ratio < thr) return make(p / dd, "p<d/2, p/q<d/(d+q)");
    return make(large_ratio_exp, "p<d/2, p/q>d/(d+q)");
  }
  if (near(ratio, 0.5)) return make(0.5, "p>d/2, p/q=1/2", true, true);
  if (ratio < 0.5) return make(0.5, "p>d/2, p/q<1/2");
  return make(large_ratio_exp, "p>d/2, p/q>1/2");
}

RateResult fractional_rate(double zeta, std::optional<double> hurst, double p,
                           int d, double eps) {
  if (!(p > 0.0)) throw std::invalid_argument("rate table: p must be > 0");
  if (d < 1) throw std::invalid_argument("rate table: d must be >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("fractional_rate: eps must be > 0");
  if (hurst) {
    if (!(*hurst > 0.0 && *hurst < 1.0))
      throw std::invalid_argument(
          "fractional_rate: hurst must lie in (0,1); hurst = 1 is the "
          "degenerate straight-line noise and is not supported");
    const double derived = 2.5 - *hurst;
    if (zeta != 0.0 && !near(zeta, derived))
      throw std::invalid_argument(
          "fractional_rate: zeta inconsistent with 5/2 - hurst");
    zeta = derived;
  }
  if (!(zeta > 1.5))
    throw std::invalid_argument("fractional_rate: zeta must exceed 3/2");

  const double base = std::min(1.0 / (2.0 * p), 1.0 / static_cast<double>(d));
  const double short_mem = (zeta - 1.5) * base - eps;
  const double inv2p = 1.0 / (2.0 * p);
  const double invd_eps = 1.0 / static_cast<double>(d) - eps;
  const double very_short = std::min(inv2p, invd_eps);

  RateResult r;
  if (near(zeta, 2.5)) {
    r = make(std::min(short_mem, very_short), "zeta=5/2 boundary", false, true,
             true);
  } else if (zeta > 2.5) {
    r = make(very_short, "zeta>5/2, min(1/(2p), 1/d-eps)", false, false,
             invd_eps <= inv2p);
  } else {
    r = make(short_mem, "3/2<zeta<5/2, (zeta-3/2)min(1/(2p),1/d)-eps", false,
             false, true);
  }
  if (!(r.exponent > 0.0))
    throw std::invalid_argument("fractional_rate: eps too large for regime");
  return r;
}

RateResult fou_rate(double hurst, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("fou_rate: p must be > 0");
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::invalid_argument("fou_rate: hurst must lie in (0,1)");
  return make(std::min(0.5, 1.0 - hurst) / p,
              hurst <= 0.5 ? "hurst<=1/2, exponent 1/(2p)"
                           : "hurst>1/2, exponent (1-hurst)/p");
}

RateFit fit_rate(std::span<const double> t, std::span<const double> v) {
  if (t.size() != v.size())
    throw std::invalid_argument("fit_rate: length mismatch");
  const std::size_t n = t.size();
  if (n < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(t[i] > 0.0) || !(v[i] > 0.0))
      throw std::invalid_argument("fit_rate: values must be positive");
    x[i] = std::log(t[i]);
    y[i] = std::log(v[i]);
  }
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (sxx <= 0.0)
    throw std::invalid_argument("fit_rate: time grid is degenerate");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ssr += r * r;
  }
  f.residual_se = std::sqrt(ssr / static_cast<double>(n - 2));
  f.slope_se = f.residual_se / std::sqrt(sxx);
  return f;
}

}  // namespace ergolab
