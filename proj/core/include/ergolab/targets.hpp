#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "ergolab/occupation.hpp"
#include "ergolab/sde.hpp"

namespace ergolab {

// Reference laws that occupation measures are compared against. A target is
// either a closed-form Gaussian or a long-run simulation surrogate: a cloud
// of independent terminal states standing in for the invariant law when no
// closed form is available.

struct Gaussian1D {
  double mean = 0.0;
  double variance = 1.0;
};

// Product of independent one-dimensional Gaussians.
struct GaussianDiag {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // per-coordinate, all > 0
};

struct EmpiricalSurrogate {
  Eigen::MatrixXd points;  // one independent draw per row
  double t_burn = 0.0;     // horizon each draw was run to
  std::uint64_t seed = 0;
  std::string provenance;  // human-readable note on how the cloud was built
};

struct TargetLaw {
  std::variant<Gaussian1D, GaussianDiag, EmpiricalSurrogate> kind;

  int dim() const;
  std::string tag() const;  // "gaussian-1d", "gaussian-diag", "surrogate"

  static TargetLaw gaussian(double mean, double variance);
  static TargetLaw gaussian_diag(const Eigen::VectorXd& mean,
                                 const Eigen::VectorXd& variance);
  static TargetLaw surrogate(EmpiricalSurrogate s);
};

// Invariant law of dX = -lambda X dt + sigma dW: centered Gaussian with
// variance sigma^2 / (2 lambda).
TargetLaw ou_invariant(double lambda, double sigma);

// Invariant law of the fractionally driven analogue with Hurst index
// H in (0,1): centered Gaussian with variance
//   sigma^2 lambda^(-2H) H Gamma(2H).
// Reduces to ou_invariant at H = 1/2.
TargetLaw fou_invariant(double lambda, double sigma, double hurst);

// Builds an EmpiricalSurrogate by running sample_count independent copies of
// the process to horizon t_burn and keeping the terminal states. Replication
// r uses child_seed(seed, r). t_burn must be at least 1; the caller picks a
// horizon long enough for the process to forget its start.
TargetLaw surrogate_invariant(const ProcessSpec& process, double t_burn,
                              int sample_count, std::uint64_t seed);

// Same, but consults cache_dir first: the cloud is stored under a name
// derived from the full request (process, horizon, count, seed) so a rerun
// loads instead of resimulating. Custom drifts are refused because their
// behaviour is not captured by any serializable description.
TargetLaw surrogate_invariant(const ProcessSpec& process, double t_burn,
                              int sample_count, std::uint64_t seed,
                              const std::string& cache_dir);

// Quantile function of a one-dimensional target at u in (0,1). Surrogate
// quantiles are order statistics of the stored cloud.
double quantile(const TargetLaw& law, double u);

// n independent draws from the target, one per row. Surrogates are resampled
// with replacement.
Eigen::MatrixXd sample(const TargetLaw& law, int n, std::uint64_t seed);

// exp(-2 t / c): the sharpest generic decay of Var(nu_t(A)) available from a
// Poincare constant c for the invariant law.
double poincare_decay(double c, double t);

}  // namespace ergolab
