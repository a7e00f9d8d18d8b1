#include "ergolab/noise.hpp"

#include "ergolab/rng.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <new>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ergolab {

namespace {

// FFTW plan creation and destruction are not thread safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuf {
  fftw_complex* p = nullptr;
  explicit FftwBuf(std::size_t n)
      : p(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (p == nullptr) throw std::bad_alloc();
  }
  ~FftwBuf() { fftw_free(p); }
  FftwBuf(const FftwBuf&) = delete;
  FftwBuf& operator=(const FftwBuf&) = delete;
};

std::vector<double> grid_times(int steps, double dt) {
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) t[static_cast<std::size_t>(k)] = k * dt;
  return t;
}

void check_grid(int steps, double dt, int dim, const char* who) {
  std::ostringstream msg;
  if (steps < 1) {
    msg << who << ": steps must be positive, got " << steps;
    throw std::invalid_argument(msg.str());
  }
  if (!(dt > 0.0)) {
    msg << who << ": dt must be positive, got " << dt;
    throw std::invalid_argument(msg.str());
  }
  if (dim < 1) {
    msg << who << ": dim must be positive, got " << dim;
    throw std::invalid_argument(msg.str());
  }
}

// int_{x1}^{x2} t^e dt with the e = -1 logarithm handled in one place
double power_integral(double x1, double x2, double e) {
  if (std::abs(e + 1.0) < 1e-12) return std::log(x2 / x1);
  return (std::pow(x2, e + 1.0) - std::pow(x1, e + 1.0)) / (e + 1.0);
}

}  // namespace

NoisePath sample_brownian(int steps, double dt, int dim, std::uint64_t seed) {
  check_grid(steps, dt, dim, "sample_brownian");
  NoisePath p;
  p.times = grid_times(steps, dt);
  p.values = Eigen::MatrixXd::Zero(steps + 1, dim);
  const double sq = std::sqrt(dt);
  for (int c = 0; c < dim; ++c) {
    Rng rng(child_seed(seed, static_cast<std::uint64_t>(c)));
    double acc = 0.0;
    for (int k = 1; k <= steps; ++k) {
      acc += sq * rng.normal();
      p.values(k, c) = acc;
    }
  }
  p.generator_tag = "brownian";
  return p;
}

double fgn_autocovariance(double hurst, double dt, int lag) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::invalid_argument("fgn_autocovariance: hurst must lie in (0,1)");
  if (!(dt > 0.0))
    throw std::invalid_argument("fgn_autocovariance: dt must be positive");
  const double h2 = 2.0 * hurst;
  const double k = std::abs(lag);
  return 0.5 * std::pow(dt, h2) *
         (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) +
          std::pow(std::abs(k - 1.0), h2));
}

FbmSampler::FbmSampler(const FbmSpec& spec) : spec_(spec) {
  if (spec.hurst == 1.0)
    throw std::invalid_argument(
        "fbm: hurst = 1 is a degenerate straight-line process and is not "
        "supported");
  if (!(spec.hurst > 0.0 && spec.hurst < 1.0))
    throw std::invalid_argument("fbm: hurst must lie in (0,1)");
  if (spec.steps < 1)
    throw std::invalid_argument("fbm: steps must be positive");
  if (!(spec.dt > 0.0)) throw std::invalid_argument("fbm: dt must be positive");

  const int n = spec.steps, m = 2 * n;
  FftwBuf in(static_cast<std::size_t>(m)), out(static_cast<std::size_t>(m));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(m, in.p, out.p, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (int j = 0; j <= n; ++j) {
    in.p[j][0] = fgn_autocovariance(spec.hurst, spec.dt, j);
    in.p[j][1] = 0.0;
  }
  for (int j = 1; j < n; ++j) {
    in.p[m - j][0] = in.p[j][0];
    in.p[m - j][1] = 0.0;
  }
  fftw_execute(plan);

  lambda_.resize(static_cast<std::size_t>(m));
  double lo = 0.0, hi = 0.0;
  for (int j = 0; j < m; ++j) {
    lambda_[static_cast<std::size_t>(j)] = out.p[j][0];
    lo = std::min(lo, out.p[j][0]);
    hi = std::max(hi, out.p[j][0]);
  }
  if (lo < -1e-8 * hi) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
    throw std::runtime_error(
        "fbm: circulant embedding spectrum has negative eigenvalues");
  }
  for (double& l : lambda_) l = std::max(l, 0.0);
  plan_ = plan;
}

FbmSampler::~FbmSampler() {
  if (plan_ != nullptr) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  }
}

NoisePath FbmSampler::sample(int dim, std::uint64_t seed) const {
  check_grid(spec_.steps, spec_.dt, dim, "fbm");
  const int n = spec_.steps, m = 2 * n;
  NoisePath p;
  p.times = grid_times(n, spec_.dt);
  p.values = Eigen::MatrixXd::Zero(n + 1, dim);
  const double invm = 1.0 / m;
  for (int c = 0; c < dim; ++c) {
    Rng rng(child_seed(seed, static_cast<std::uint64_t>(c)));
    FftwBuf in(static_cast<std::size_t>(m)), out(static_cast<std::size_t>(m));
    in.p[0][0] = std::sqrt(lambda_[0] * invm) * rng.normal();
    in.p[0][1] = 0.0;
    in.p[n][0] =
        std::sqrt(lambda_[static_cast<std::size_t>(n)] * invm) * rng.normal();
    in.p[n][1] = 0.0;
    for (int j = 1; j < n; ++j) {
      const double s =
          std::sqrt(0.5 * lambda_[static_cast<std::size_t>(j)] * invm);
      const double re = s * rng.normal();
      const double im = s * rng.normal();
      in.p[j][0] = re;
      in.p[j][1] = im;
      in.p[m - j][0] = re;
      in.p[m - j][1] = -im;
    }
    fftw_execute_dft(static_cast<fftw_plan>(plan_), in.p, out.p);
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      acc += out.p[k][0];
      p.values(k + 1, c) = acc;
    }
  }
  p.generator_tag = "fbm";
  return p;
}

NoisePath sample_fbm(const FbmSpec& spec, int dim, std::uint64_t seed) {
  const FbmSampler sampler(spec);
  return sampler.sample(dim, seed);
}

MovingAverageKernel::MovingAverageKernel(const KernelSpec& spec)
    : spec_(spec) {
  if (!(spec.hurst > 0.0 && spec.hurst <= 1.0))
    throw std::invalid_argument("kernel: hurst must lie in (0,1]");
  if (!(spec.zeta > 1.5))
    throw std::invalid_argument("kernel: zeta must exceed 3/2");
  if (!(spec.t0 > 0.0)) throw std::invalid_argument("kernel: t0 must be positive");
  if (spec.past_truncation < 0.0)
    throw std::invalid_argument("kernel: past_truncation must be nonnegative");
  log_tail_ = std::abs(spec.zeta - 2.0) < 1e-12;
  const double e = spec.hurst - 0.5;
  const double g0 = std::pow(spec.t0, e);
  if (log_tail_) {
    b_ = e * g0;
    a_ = g0 - b_ * std::log(spec.t0);
  } else {
    b_ = e / (2.0 - spec.zeta) * std::pow(spec.t0, e + spec.zeta - 2.0);
    a_ = g0 - b_ * std::pow(spec.t0, 2.0 - spec.zeta);
  }
}

double MovingAverageKernel::value(double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("kernel: value needs t > 0");
  if (t <= spec_.t0) return std::pow(t, spec_.hurst - 0.5);
  if (log_tail_) return a_ + b_ * std::log(t);
  return a_ + b_ * std::pow(t, 2.0 - spec_.zeta);
}

double MovingAverageKernel::integral(double x) const {
  if (!(x > 0.0)) return 0.0;
  const double e = spec_.hurst - 0.5;
  const double h = std::min(x, spec_.t0);
  double acc = std::pow(h, e + 1.0) / (e + 1.0);
  if (x > spec_.t0) {
    acc += a_ * (x - spec_.t0);
    if (log_tail_)
      acc += b_ * (x * std::log(x) - x -
                   (spec_.t0 * std::log(spec_.t0) - spec_.t0));
    else
      acc += b_ * power_integral(spec_.t0, x, 2.0 - spec_.zeta);
  }
  return acc;
}

double MovingAverageKernel::square_integral(double x) const {
  if (!(x > 0.0)) return 0.0;
  const double e = spec_.hurst - 0.5;
  const double h = std::min(x, spec_.t0);
  double acc = std::pow(h, 2.0 * e + 1.0) / (2.0 * e + 1.0);
  if (x > spec_.t0) {
    const double t0 = spec_.t0;
    acc += a_ * a_ * (x - t0);
    if (log_tail_) {
      auto i1 = [](double t) { return t * std::log(t) - t; };
      auto i2 = [](double t) {
        const double l = std::log(t);
        return t * (l * l - 2.0 * l + 2.0);
      };
      acc += 2.0 * a_ * b_ * (i1(x) - i1(t0));
      acc += b_ * b_ * (i2(x) - i2(t0));
    } else {
      acc += 2.0 * a_ * b_ * power_integral(t0, x, 2.0 - spec_.zeta);
      acc += b_ * b_ * power_integral(t0, x, 4.0 - 2.0 * spec_.zeta);
    }
  }
  return acc;
}

double MovingAverageKernel::tail_stddev_bound(double T, double horizon) const {
  if (!(horizon > 0.0))
    throw std::invalid_argument("kernel: tail bound needs a positive horizon");
  if (b_ == 0.0) return 0.0;
  if (!(T >= spec_.t0))
    throw std::invalid_argument(
        "kernel: tail bound is only valid for truncations past the knot t0");
  // |g'(v)| <= |b (2-zeta)| v^(1-zeta) beyond the knot, so the neglected
  // variance is at most horizon^2 int_T^inf g'^2.
  if (log_tail_) return horizon * std::abs(b_) / std::sqrt(T);
  const double z = spec_.zeta;
  return horizon * std::abs(b_ * (2.0 - z)) *
         std::pow(T, 0.5 * (3.0 - 2.0 * z)) / std::sqrt(2.0 * z - 3.0);
}

double MovingAverageKernel::recommended_truncation(double horizon,
                                                   double tol) const {
  if (!(tol > 0.0))
    throw std::invalid_argument("kernel: truncation tolerance must be positive");
  if (!(horizon > 0.0))
    throw std::invalid_argument("kernel: truncation needs a positive horizon");
  if (b_ == 0.0) return spec_.t0;
  double T;
  if (log_tail_) {
    const double r = horizon * std::abs(b_) / tol;
    T = r * r;
  } else {
    const double z = spec_.zeta;
    const double c = std::abs(b_ * (2.0 - z)) / std::sqrt(2.0 * z - 3.0);
    T = std::pow(horizon * c / tol, 2.0 / (2.0 * z - 3.0));
  }
  return std::max(T, spec_.t0);
}

MovingAverageScheme build_ma_scheme(const KernelSpec& spec, int steps,
                                    double dt) {
  check_grid(steps, dt, 1, "moving average");
  const MovingAverageKernel kernel(spec);
  const double horizon = steps * dt;
  const double scale = std::sqrt(kernel.square_integral(horizon));

  MovingAverageScheme s;
  s.dt = dt;
  s.w0 = std::sqrt(kernel.square_integral(dt));

  double trunc = 0.0;
  if (kernel.tail_b() != 0.0) {
    if (spec.past_truncation > 0.0) {
      trunc = spec.past_truncation;
      const double bound = kernel.tail_stddev_bound(trunc, horizon);
      if (bound > 0.1 * scale) {
        std::ostringstream msg;
        msg << "moving average: past_truncation " << trunc
            << " neglects a tail of stddev " << bound
            << ", over 10% of the path scale " << scale << "; use at least "
            << kernel.recommended_truncation(horizon, 0.1 * scale);
        throw std::invalid_argument(msg.str());
      }
    } else {
      trunc = kernel.recommended_truncation(horizon, 1e-3 * scale);
    }
  }

  const double jreal = std::max(0.0, std::ceil(trunc / dt - 1e-12));
  if (jreal > 5e7)
    throw std::runtime_error(
        "moving average: automatic truncation needs too many past cells for "
        "this long-memory kernel; set past_truncation explicitly");
  const int j = static_cast<int>(jreal);
  s.past_cells = j;

  s.cell_integrals.resize(static_cast<std::size_t>(steps + j));
  double prev = 0.0;
  const double isq = 1.0 / std::sqrt(dt);
  for (int m = 0; m < steps + j; ++m) {
    const double next = kernel.integral((m + 1) * dt);
    s.cell_integrals[static_cast<std::size_t>(m)] = (next - prev) * isq;
    prev = next;
  }
  return s;
}

std::vector<double> fft_convolve(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t lc = a.size() + b.size() - 1;
  std::size_t m = 1;
  while (m < lc) m <<= 1;
  FftwBuf fa(m), fb(m);
  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd = fftw_plan_dft_1d(static_cast<int>(m), fa.p, fa.p, FFTW_FORWARD,
                           FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(static_cast<int>(m), fa.p, fa.p, FFTW_BACKWARD,
                           FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < m; ++i) {
    fa.p[i][0] = i < a.size() ? a[i] : 0.0;
    fa.p[i][1] = 0.0;
    fb.p[i][0] = i < b.size() ? b[i] : 0.0;
    fb.p[i][1] = 0.0;
  }
  fftw_execute_dft(fwd, fa.p, fa.p);
  fftw_execute_dft(fwd, fb.p, fb.p);
  const double inv = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double re = fa.p[i][0] * fb.p[i][0] - fa.p[i][1] * fb.p[i][1];
    const double im = fa.p[i][0] * fb.p[i][1] + fa.p[i][1] * fb.p[i][0];
    fa.p[i][0] = re * inv;
    fa.p[i][1] = im * inv;
  }
  fftw_execute_dft(bwd, fa.p, fa.p);
  std::vector<double> out(lc);
  for (std::size_t i = 0; i < lc; ++i) out[i] = fa.p[i][0];
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  return out;
}

NoisePath sample_moving_average(const KernelSpec& spec, int steps, double dt,
                                int dim, std::uint64_t seed) {
  check_grid(steps, dt, dim, "moving average");
  const MovingAverageScheme s = build_ma_scheme(spec, steps, dt);
  const int j = s.past_cells;
  const auto& A = s.cell_integrals;

  NoisePath p;
  p.times = grid_times(steps, dt);
  p.values = Eigen::MatrixXd::Zero(steps + 1, dim);

  // direct summation is cheaper until the quadratic terms dominate
  const double direct_cost =
      static_cast<double>(steps) * j + 0.5 * static_cast<double>(steps) * steps;

  for (int c = 0; c < dim; ++c) {
    const std::uint64_t cs = child_seed(seed, static_cast<std::uint64_t>(c));
    Rng fut(child_seed(cs, 0));
    Rng past(child_seed(cs, 1));
    std::vector<double> xf(static_cast<std::size_t>(steps));
    for (double& x : xf) x = fut.normal();
    std::vector<double> xp(static_cast<std::size_t>(j));
    for (double& x : xp) x = past.normal();

    if (direct_cost <= 2e7) {
      for (int k = 1; k <= steps; ++k) {
        double acc = xf[static_cast<std::size_t>(k - 1)] * s.w0;
        for (int m = 1; m < k; ++m)
          acc += xf[static_cast<std::size_t>(m - 1)] *
                 A[static_cast<std::size_t>(k - m)];
        for (int i = 0; i < j; ++i)
          acc += xp[static_cast<std::size_t>(i)] *
                 (A[static_cast<std::size_t>(k + i)] -
                  A[static_cast<std::size_t>(i)]);
        p.values(k, c) = acc;
      }
    } else {
      double sp = 0.0;
      for (int i = 0; i < j; ++i) sp += xp[static_cast<std::size_t>(i)] * A[static_cast<std::size_t>(i)];
      std::vector<double> corr;
      if (j > 0) {
        std::vector<double> xr(xp.rbegin(), xp.rend());
        corr = fft_convolve(xr, A);  // index k+j-1 holds sum_i xp[i] A[k+i]
      }
      std::vector<double> head(A.begin(),
                               A.begin() + static_cast<std::ptrdiff_t>(steps));
      head[0] = 0.0;  // the cell touching 0 is handled by w0
      const std::vector<double> fconv = fft_convolve(xf, head);
      for (int k = 1; k <= steps; ++k) {
        double acc = xf[static_cast<std::size_t>(k - 1)] * s.w0 +
                     fconv[static_cast<std::size_t>(k - 1)];
        if (j > 0) acc += corr[static_cast<std::size_t>(k + j - 1)] - sp;
        p.values(k, c) = acc;
      }
    }
  }
  p.generator_tag = "moving_average";
  return p;
}

}  // namespace ergolab
