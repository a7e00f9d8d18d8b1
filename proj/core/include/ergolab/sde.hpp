#pragma once

#include "ergolab/noise.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace ergolab {

// b(x) = -rate x
struct LinearDrift {
  double rate = 1.0;
};

// Gradient of the radial double-well potential
//   V(x) = (kappa + lambda_nc) |x|^4 / (4 R^2) - lambda_nc |x|^2 / 2,
// repelling near the origin when lambda_nc > 0, contracting at rate kappa
// on the sphere |x| = R. radius = 0 collapses to b(x) = -kappa x and is
// only accepted with lambda_nc = 0.
struct DoubleWellDrift {
  double lambda_nc = 0.0;
  double kappa = 1.0;
  double radius = 1.0;
};

// b(x) = -strength x |x|^(2a-2) outside |x| = inner_radius, so that
// <b(x), x> = -strength |x|^(2a) there; a cubic radial blend
// -(c1 + c3 |x|^2) x keeps the field C^1 inside. exponent a in (0,1];
// a < 1 requires inner_radius > 0 (the raw field is not Lipschitz at 0).
struct WeakMeanRevertingDrift {
  double exponent = 1.0;
  double strength = 1.0;
  double inner_radius = 0.0;
};

struct CustomDrift {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> b;
  double lipschitz = 0.0;  // declared bound, informational
};

struct DriftSpec {
  std::variant<LinearDrift, DoubleWellDrift, WeakMeanRevertingDrift,
               CustomDrift>
      kind;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
  std::string tag() const;

  static DriftSpec linear(double rate);
  static DriftSpec double_well(double lambda_nc, double kappa, double radius);
  static DriftSpec weak_mean_reverting(double exponent, double strength,
                                       double inner_radius);
  static DriftSpec custom(std::function<Eigen::VectorXd(const Eigen::VectorXd&)> b,
                          double lipschitz);
};

struct ConstantDiffusion {
  Eigen::MatrixXd sigma;  // d x d'
};

struct StateDiffusion {
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> sigma;
  double growth_exponent = 0.5;    // r in (0, 1/2]
  double ellipticity_floor = 0.0;  // checked on visited states when > 0
};

struct DiffusionSpec {
  std::variant<ConstantDiffusion, StateDiffusion> kind;

  Eigen::MatrixXd eval(const Eigen::VectorXd& x) const;
  std::string tag() const;

  static DiffusionSpec constant(Eigen::MatrixXd sigma);
  static DiffusionSpec zero(int dim);
  static DiffusionSpec scalar(int dim, double s);  // s * identity
  static DiffusionSpec state_dependent(
      std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> sigma,
      double growth_exponent, double ellipticity_floor);
};

struct PathSample {
  std::vector<double> times;
  Eigen::MatrixXd states;  // (steps+1) x d
  std::string drift_tag, diffusion_tag, noise_tag;
  std::uint64_t seed = 0;  // 0 when driven by an externally built path

  int steps() const { return static_cast<int>(times.size()) - 1; }
  int dim() const { return static_cast<int>(states.cols()); }
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

// Explicit Euler stepping X_{k+1} = X_k + b(X_k) dt + sigma(X_k) dG_k.
// The noise grid must match (dt, steps); Linear drift requires rate*dt < 1.
// A state norm beyond 1e6 (1 + |x0|), or any non-finite state, raises a
// divergence error carrying the step index.
PathSample euler_maruyama(const DriftSpec& drift, const DiffusionSpec& diffusion,
                          const Eigen::VectorXd& x0, double dt, int steps,
                          const NoisePath& noise);
// Same, driving the SDE with Brownian noise sampled from `seed`.
PathSample euler_maruyama(const DriftSpec& drift, const DiffusionSpec& diffusion,
                          const Eigen::VectorXd& x0, double dt, int steps,
                          std::uint64_t seed);

// Additive case dX = b(X) dt + sigma dG for an arbitrary Gaussian driver.
// sigma must be square and invertible.
PathSample integrate_additive(const DriftSpec& drift,
                              const Eigen::MatrixXd& sigma,
                              const Eigen::VectorXd& x0,
                              const NoisePath& noise);

// Complete recipe for one simulated process: dynamics, start point, grid,
// and the driving noise family (Brownian, or fractional with the given
// Hurst index; fractional driving requires a constant diffusion).
struct ProcessSpec {
  DriftSpec drift;
  DiffusionSpec diffusion;
  Eigen::VectorXd x0;
  double dt = 0.0;
  bool fractional = false;
  double hurst = 0.5;
};

// Run the process for `steps` steps from its start point.
PathSample simulate_process(const ProcessSpec& process, int steps,
                            std::uint64_t seed);
// Same, but from an explicit start (overriding process.x0) and, for the
// fractional case, reusing a prepared sampler so repeated runs share the
// spectral setup. sampler may be null for Brownian driving.
PathSample simulate_process(const ProcessSpec& process, int steps,
                            std::uint64_t seed, const Eigen::VectorXd& x0,
                            const FbmSampler* sampler);

// Empirical audit of the drift against the contraction condition
//   <b(x)-b(y), x-y> <= -kappa |x-y|^2   whenever |x|, |y| >= radius
// (at most lambda |x-y|^2 expansion otherwise) and a mean-reversion fit
//   <b(x), x> <= kappa_low - kappa_bar |x|^2
// over points sampled uniformly in the ball B(0, radius).
struct DriftConditionReport {
  bool contraction_holds = false;
  double kappa = 0.0;   // contraction rate outside `radius`
  double radius = 0.0;  // smallest sampled radius where contraction holds
  double lambda = 0.0;  // worst expansion among the remaining pairs

  bool hajek_holds = false;
  double hajek_kappa_bar = 0.0;  // fitted quadratic decay rate
  double hajek_kappa_low = 0.0;  // smallest constant closing the bound
  double q = 1.0;                // echoed moment order

  // worst pair seen when the contraction scan fails; empty otherwise
  Eigen::VectorXd violation_x, violation_y;
  double violation_rate = 0.0;
};

DriftConditionReport check_drift_conditions(const DriftSpec& drift, double q,
                                            int dim, int sample_count,
                                            double radius, std::uint64_t seed);

}  // namespace ergolab
