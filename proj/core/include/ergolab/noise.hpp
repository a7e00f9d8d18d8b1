#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace ergolab {

// A sampled Gaussian driving path on a uniform grid. values.row(k) is the
// path at times[k]; row 0 is always zero.
struct NoisePath {
  std::vector<double> times;
  Eigen::MatrixXd values;  // (steps+1) x dim
  std::string generator_tag;

  int steps() const { return static_cast<int>(times.size()) - 1; }
  int dim() const { return static_cast<int>(values.cols()); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

// Standard Brownian motion, increments N(0, dt I).
NoisePath sample_brownian(int steps, double dt, int dim, std::uint64_t seed);

struct FbmSpec {
  double hurst = 0.5;  // in (0,1); hurst = 1 (degenerate line) unsupported
  double dt = 1.0;
  int steps = 1;
};

// Autocovariance of the fBm increment sequence at integer lag:
// dt^{2H}/2 (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H}).
double fgn_autocovariance(double hurst, double dt, int lag);

// Exact synthesis of fractional Brownian motion on a uniform grid by
// circulant embedding of the increment covariance. The embedding size is
// 2*steps; nonnegative definiteness is checked at construction and a
// negative spectrum raises std::runtime_error.
class FbmSampler {
 public:
  explicit FbmSampler(const FbmSpec& spec);
  ~FbmSampler();
  FbmSampler(const FbmSampler&) = delete;
  FbmSampler& operator=(const FbmSampler&) = delete;

  NoisePath sample(int dim, std::uint64_t seed) const;
  const FbmSpec& spec() const { return spec_; }
  // Spectrum of the embedded circulant; all entries nonnegative.
  const std::vector<double>& eigenvalues() const { return lambda_; }

 private:
  FbmSpec spec_;
  std::vector<double> lambda_;
  void* plan_ = nullptr;  // fftw plan, reused across samples
};

NoisePath sample_fbm(const FbmSpec& spec, int dim, std::uint64_t seed);

// Moving-average kernel: g(t) = t^(hurst-1/2) on (0, t0], extended beyond t0
// by the C^1 tail a + b t^(2-zeta) (a + b log t when zeta = 2), so that
// |g''(t)| decays like t^(-zeta). zeta = 5/2 - hurst reproduces the pure
// power kernel globally.
struct KernelSpec {
  double hurst = 0.5;  // in (0, 1]
  double zeta = 3.0;   // > 3/2
  double t0 = 1.0;     // > 0
  // Past-integral truncation horizon; 0 selects automatically so the
  // neglected standard deviation is below 1e-3 of the path scale. Explicit
  // values are rejected when that deviation exceeds 10% of the path scale.
  double past_truncation = 0.0;
};

class MovingAverageKernel {
 public:
  explicit MovingAverageKernel(const KernelSpec& spec);

  double value(double t) const;            // g(t), t > 0
  double integral(double x) const;         // int_0^x g, closed form
  double square_integral(double x) const;  // int_0^x g^2, closed form

  // Upper bound on the standard deviation of the neglected past contribution
  // at time `horizon` when truncating at T >= t0.
  double tail_stddev_bound(double T, double horizon) const;
  // Smallest truncation with tail_stddev_bound <= tol (at least t0).
  double recommended_truncation(double horizon, double tol) const;

  double tail_a() const { return a_; }
  double tail_b() const { return b_; }

 private:
  KernelSpec spec_;
  double a_ = 0.0, b_ = 0.0;  // tail coefficients
  bool log_tail_ = false;     // zeta = 2
};

// Linear convolution of two real sequences, length a.size()+b.size()-1.
// FFT-based; exact up to roundoff.
std::vector<double> fft_convolve(const std::vector<double>& a,
                                 const std::vector<double>& b);

// Discretization of the moving-average integral on a dt grid. The noise at
// t_k combines J past-cell draws and k future-cell draws:
//   G_k = sum_{j=1..J} xi_p[j] (A[k+j-1] - A[j-1])
//       + sum_{m=1..k-1} xi_f[m] A[k-m]   (cells away from 0)
//       + xi_f[k] w0                      (cell touching 0)
// where A[m] = dt^{-1/2} int_{m dt}^{(m+1) dt} g and w0 matches the exact
// cell variance int_0^dt g^2. Cell averages, never point values, so the
// hurst < 1/2 singularity at 0 is integrable and harmless.
struct MovingAverageScheme {
  std::vector<double> cell_integrals;  // A[m], m = 0 .. steps+J-1
  double w0 = 0.0;
  int past_cells = 0;  // J
  double dt = 0.0;
};

MovingAverageScheme build_ma_scheme(const KernelSpec& spec, int steps,
                                    double dt);

// Gaussian moving-average noise with stationary increments. The past stream
// and the future stream are independent child streams of `seed`, and past
// cells are drawn from -dt outward, so enlarging past_truncation only
// appends draws and never perturbs existing ones.
NoisePath sample_moving_average(const KernelSpec& spec, int steps, double dt,
                                int dim, std::uint64_t seed);

}  // namespace ergolab
