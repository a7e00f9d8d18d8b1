#pragma once

// Independent reference computations used only by tests. Everything here is
// deliberately naive (enumeration, bisection, direct quadrature) so that it
// shares no code path with the library implementations it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace oracle {

// Adaptive Simpson quadrature.
inline double simpson_rec(const std::function<double(double)>& f, double a,
                          double b, double fa, double fm, double fb,
                          double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-10) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Quantile by bisection on erfc in long double; independent of any
// closed-form inverse used by the library.
inline double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("quantile domain");
  long double lo = -40.0L, hi = 40.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    const long double c = 0.5L * erfcl(-mid / sqrtl(2.0L));
    if (c < static_cast<long double>(u))
      lo = mid;
    else
      hi = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

// Minimal average assignment cost between equal-size point sets under
// cost(i,j) = |x_i - y_j|^p, by full permutation enumeration. n <= 9.
inline double brute_force_match_cost(const std::vector<std::vector<double>>& x,
                                     const std::vector<std::vector<double>>& y,
                                     double p) {
  const std::size_t n = x.size();
  if (n != y.size() || n == 0 || n > 9)
    throw std::invalid_argument("brute_force_match_cost: bad sizes");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) {
        const double d = x[i][k] - y[perm[i]][k];
        d2 += d * d;
      }
      c += std::pow(std::sqrt(d2), p);
    }
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

// Exact W_p between two equal-weight 1D point sets of possibly different
// sizes, by walking the merged quantile breakpoints.
inline double wasserstein_p_1d_equal_weights(std::vector<double> x,
                                             std::vector<double> y, double p) {
  if (x.empty() || y.empty())
    throw std::invalid_argument("wasserstein oracle: empty input");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double u = 0.0, acc = 0.0;
  while (i < x.size() && j < y.size()) {
    const double ui = (static_cast<double>(i) + 1.0) / n;
    const double uj = (static_cast<double>(j) + 1.0) / m;
    const double un = std::min(ui, uj);
    acc += (un - u) * std::pow(std::abs(x[i] - y[j]), p);
    u = un;
    if (ui <= un + 1e-15) ++i;
    if (uj <= un + 1e-15) ++j;
  }
  return std::pow(acc, 1.0 / p);
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double stat = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    stat = std::max(stat, std::abs(fa - fb));
  }
  return stat;
}

// 1% critical value for the two-sample KS test, equal sizes n.
inline double ks_critical_1pct(std::size_t n) {
  return 1.628 * std::sqrt(2.0 / static_cast<double>(n));
}

// Fractional Brownian motion covariance, exact.
inline double fbm_cov(double hurst, double s, double t) {
  return 0.5 * (std::pow(s, 2.0 * hurst) + std::pow(t, 2.0 * hurst) -
                std::pow(std::abs(t - s), 2.0 * hurst));
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace oracle
