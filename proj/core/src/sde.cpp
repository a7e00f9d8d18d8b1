#include "ergolab/sde.hpp"

#include "ergolab/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace ergolab {

DriftSpec DriftSpec::linear(double rate) {
  if (!(rate > 0.0))
    throw std::invalid_argument("linear drift: rate must be positive");
  return DriftSpec{LinearDrift{rate}};
}

DriftSpec DriftSpec::double_well(double lambda_nc, double kappa,
                                 double radius) {
  if (lambda_nc < 0.0)
    throw std::invalid_argument("double well: lambda_nc must be nonnegative");
  if (!(kappa > 0.0))
    throw std::invalid_argument("double well: kappa must be positive");
  if (radius < 0.0)
    throw std::invalid_argument("double well: radius must be nonnegative");
  if (radius == 0.0 && lambda_nc > 0.0)
    throw std::invalid_argument(
        "double well: a nonconvex core needs a positive well radius");
  return DriftSpec{DoubleWellDrift{lambda_nc, kappa, radius}};
}

DriftSpec DriftSpec::weak_mean_reverting(double exponent, double strength,
                                         double inner_radius) {
  if (!(exponent > 0.0 && exponent <= 1.0))
    throw std::invalid_argument(
        "weak mean reversion: exponent must lie in (0,1]");
  if (!(strength > 0.0))
    throw std::invalid_argument("weak mean reversion: strength must be positive");
  if (inner_radius < 0.0)
    throw std::invalid_argument(
        "weak mean reversion: inner radius must be nonnegative");
  if (exponent < 1.0 && inner_radius == 0.0)
    throw std::invalid_argument(
        "weak mean reversion: exponents below 1 need a positive inner radius "
        "to keep the field Lipschitz at the origin");
  return DriftSpec{WeakMeanRevertingDrift{exponent, strength, inner_radius}};
}

DriftSpec DriftSpec::custom(
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> b,
    double lipschitz) {
  if (!b) throw std::invalid_argument("custom drift: missing evaluation handle");
  if (lipschitz < 0.0)
    throw std::invalid_argument("custom drift: Lipschitz bound must be nonnegative");
  return DriftSpec{CustomDrift{std::move(b), lipschitz}};
}

Eigen::VectorXd DriftSpec::operator()(const Eigen::VectorXd& x) const {
  struct Eval {
    const Eigen::VectorXd& x;
    Eigen::VectorXd operator()(const LinearDrift& d) const {
      return -d.rate * x;
    }
    Eigen::VectorXd operator()(const DoubleWellDrift& d) const {
      if (d.radius == 0.0) return -d.kappa * x;
      const double c = (d.kappa + d.lambda_nc) * x.squaredNorm() /
                           (d.radius * d.radius) -
                       d.lambda_nc;
      return -c * x;
    }
    Eigen::VectorXd operator()(const WeakMeanRevertingDrift& d) const {
      const double r = x.norm();
      if (d.inner_radius > 0.0 && r <= d.inner_radius) {
        const double m = d.inner_radius;
        const double c1 = d.strength * (2.0 - d.exponent) *
                          std::pow(m, 2.0 * d.exponent - 2.0);
        const double c3 = d.strength * (d.exponent - 1.0) *
                          std::pow(m, 2.0 * d.exponent - 4.0);
        return -(c1 + c3 * r * r) * x;
      }
      if (r == 0.0) return Eigen::VectorXd::Zero(x.size());
      return -d.strength * std::pow(r, 2.0 * d.exponent - 2.0) * x;
    }
    Eigen::VectorXd operator()(const CustomDrift& d) const { return d.b(x); }
  };
  return std::visit(Eval{x}, kind);
}

std::string DriftSpec::tag() const {
  struct Tag {
    std::string operator()(const LinearDrift&) const { return "linear"; }
    std::string operator()(const DoubleWellDrift&) const {
      return "double_well";
    }
    std::string operator()(const WeakMeanRevertingDrift&) const {
      return "weak_mean_reverting";
    }
    std::string operator()(const CustomDrift&) const { return "custom"; }
  };
  return std::visit(Tag{}, kind);
}

DiffusionSpec DiffusionSpec::constant(Eigen::MatrixXd sigma) {
  if (sigma.size() == 0)
    throw std::invalid_argument("diffusion: empty sigma matrix");
  return DiffusionSpec{ConstantDiffusion{std::move(sigma)}};
}

DiffusionSpec DiffusionSpec::zero(int dim) {
  if (dim < 1) throw std::invalid_argument("diffusion: dim must be positive");
  return constant(Eigen::MatrixXd::Zero(dim, dim));
}

DiffusionSpec DiffusionSpec::scalar(int dim, double s) {
  if (dim < 1) throw std::invalid_argument("diffusion: dim must be positive");
  return constant(s * Eigen::MatrixXd::Identity(dim, dim));
}

DiffusionSpec DiffusionSpec::state_dependent(
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> sigma,
    double growth_exponent, double ellipticity_floor) {
  if (!sigma)
    throw std::invalid_argument("diffusion: missing evaluation handle");
  if (!(growth_exponent > 0.0 && growth_exponent <= 0.5))
    throw std::invalid_argument(
        "diffusion: growth exponent must lie in (0, 1/2]");
  if (ellipticity_floor < 0.0)
    throw std::invalid_argument(
        "diffusion: ellipticity floor must be nonnegative");
  return DiffusionSpec{
      StateDiffusion{std::move(sigma), growth_exponent, ellipticity_floor}};
}

Eigen::MatrixXd DiffusionSpec::eval(const Eigen::VectorXd& x) const {
  if (const auto* c = std::get_if<ConstantDiffusion>(&kind)) return c->sigma;
  return std::get<StateDiffusion>(kind).sigma(x);
}

std::string DiffusionSpec::tag() const {
  return std::holds_alternative<ConstantDiffusion>(kind) ? "constant" : "state";
}

namespace {

[[noreturn]] void diverged(int step, double norm) {
  std::ostringstream msg;
  msg << "sde: path diverged at step " << step << " (|x| = " << norm << ")";
  throw std::runtime_error(msg.str());
}

void check_sigma_dims(const Eigen::MatrixXd& sig, int d, int noise_dim,
                      int step) {
  if (sig.rows() != d || sig.cols() != noise_dim) {
    std::ostringstream msg;
    msg << "sde: sigma is " << sig.rows() << "x" << sig.cols() << " at step "
        << step << " but the state has dimension " << d << " and the noise "
        << noise_dim;
    throw std::invalid_argument(msg.str());
  }
}

PathSample run_euler(const DriftSpec& drift, const DiffusionSpec& diffusion,
                     const Eigen::VectorXd& x0, double dt, int steps,
                     const NoisePath& noise, std::uint64_t seed_echo) {
  if (x0.size() == 0) throw std::invalid_argument("sde: empty initial state");
  if (!(dt > 0.0)) throw std::invalid_argument("sde: dt must be positive");
  if (steps < 1) throw std::invalid_argument("sde: steps must be positive");
  if (const auto* lin = std::get_if<LinearDrift>(&drift.kind)) {
    if (!(lin->rate * dt < 1.0))
      throw std::invalid_argument(
          "sde: linear drift needs rate*dt < 1 for a stable explicit step");
  }
  if (noise.steps() != steps || std::abs(noise.dt() - dt) > 1e-12 * dt) {
    std::ostringstream msg;
    msg << "sde: noise grid (" << noise.steps() << " steps of " << noise.dt()
        << ") does not match the requested grid (" << steps << " steps of "
        << dt << ")";
    throw std::invalid_argument(msg.str());
  }

  const int d = static_cast<int>(x0.size());
  const int nd = noise.dim();
  const auto* state_sig = std::get_if<StateDiffusion>(&diffusion.kind);

  PathSample p;
  p.times = noise.times;
  p.states = Eigen::MatrixXd(steps + 1, d);
  p.states.row(0) = x0.transpose();
  p.drift_tag = drift.tag();
  p.diffusion_tag = diffusion.tag();
  p.noise_tag = noise.generator_tag;
  p.seed = seed_echo;

  const double limit = 1e6 * (1.0 + x0.norm());
  Eigen::VectorXd x = x0;
  Eigen::MatrixXd sig;
  if (state_sig == nullptr) {
    sig = diffusion.eval(x0);
    check_sigma_dims(sig, d, nd, 0);
  }

  for (int k = 0; k < steps; ++k) {
    if (state_sig != nullptr) {
      sig = state_sig->sigma(x);
      check_sigma_dims(sig, d, nd, k);
      if (state_sig->ellipticity_floor > 0.0) {
        const Eigen::MatrixXd gram = sig * sig.transpose();
        const double mineig =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram)
                .eigenvalues()
                .minCoeff();
        if (mineig < state_sig->ellipticity_floor * (1.0 - 1e-9)) {
          std::ostringstream msg;
          msg << "sde: ellipticity floor " << state_sig->ellipticity_floor
              << " violated at step " << k << " (min eigenvalue " << mineig
              << ")";
          throw std::runtime_error(msg.str());
        }
      }
    }
    const Eigen::VectorXd b = drift(x);
    if (b.size() != d)
      throw std::invalid_argument("sde: drift output dimension mismatch");
    x += b * dt;
    x += sig * (noise.values.row(k + 1) - noise.values.row(k)).transpose();
    if (!x.allFinite() || x.norm() > limit) diverged(k + 1, x.norm());
    p.states.row(k + 1) = x.transpose();
  }
  return p;
}

}  // namespace

PathSample euler_maruyama(const DriftSpec& drift, const DiffusionSpec& diffusion,
                          const Eigen::VectorXd& x0, double dt, int steps,
                          const NoisePath& noise) {
  return run_euler(drift, diffusion, x0, dt, steps, noise, 0);
}

PathSample euler_maruyama(const DriftSpec& drift, const DiffusionSpec& diffusion,
                          const Eigen::VectorXd& x0, double dt, int steps,
                          std::uint64_t seed) {
  const Eigen::MatrixXd sig0 = diffusion.eval(x0);
  const NoisePath noise =
      sample_brownian(steps, dt, static_cast<int>(sig0.cols()), seed);
  return run_euler(drift, diffusion, x0, dt, steps, noise, seed);
}

PathSample integrate_additive(const DriftSpec& drift,
                              const Eigen::MatrixXd& sigma,
                              const Eigen::VectorXd& x0,
                              const NoisePath& noise) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != x0.size())
    throw std::invalid_argument(
        "additive sde: sigma must be square with the state dimension");
  if (!Eigen::FullPivLU<Eigen::MatrixXd>(sigma).isInvertible())
    throw std::invalid_argument("additive sde: sigma must be invertible");
  return run_euler(drift, DiffusionSpec::constant(sigma), x0, noise.dt(),
                   noise.steps(), noise, 0);
}

PathSample simulate_process(const ProcessSpec& process, int steps,
                            std::uint64_t seed) {
  return simulate_process(process, steps, seed, process.x0, nullptr);
}

PathSample simulate_process(const ProcessSpec& process, int steps,
                            std::uint64_t seed, const Eigen::VectorXd& x0,
                            const FbmSampler* sampler) {
  if (!process.fractional)
    return euler_maruyama(process.drift, process.diffusion, x0, process.dt,
                          steps, seed);
  if (process.diffusion.tag() != "constant")
    throw std::invalid_argument(
        "simulate_process: fractional driving needs a constant diffusion");
  const Eigen::MatrixXd sigma = process.diffusion.eval(x0);
  NoisePath noise;
  if (sampler != nullptr) {
    const FbmSpec& spec = sampler->spec();
    if (spec.steps != steps || spec.hurst != process.hurst ||
        std::abs(spec.dt - process.dt) > 1e-12 * process.dt)
      throw std::invalid_argument(
          "simulate_process: sampler grid does not match the process");
    noise = sampler->sample(static_cast<int>(sigma.cols()), seed);
  } else {
    noise = sample_fbm(FbmSpec{process.hurst, process.dt, steps},
                       static_cast<int>(sigma.cols()), seed);
  }
  PathSample path = integrate_additive(process.drift, sigma, x0, noise);
  path.seed = seed;
  return path;
}

DriftConditionReport check_drift_conditions(const DriftSpec& drift, double q,
                                            int dim, int sample_count,
                                            double radius, std::uint64_t seed) {
  if (!(q >= 1.0))
    throw std::invalid_argument("drift check: q must be at least 1");
  if (dim < 1) throw std::invalid_argument("drift check: dim must be positive");
  if (sample_count < 2)
    throw std::invalid_argument("drift check: need at least 2 samples");
  if (!(radius > 0.0))
    throw std::invalid_argument("drift check: radius must be positive");

  Rng rng(seed);
  auto ball = [&]() {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = rng.normal();
    double nrm = v.norm();
    if (nrm == 0.0) {
      v(0) = 1.0;
      nrm = 1.0;
    }
    const double r = radius * std::pow(rng.uniform_pos(), 1.0 / dim);
    return ((r / nrm) * v).eval();
  };

  std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(sample_count));
  std::vector<Eigen::VectorXd> ys(static_cast<std::size_t>(sample_count));
  std::vector<double> rate(static_cast<std::size_t>(sample_count));
  std::vector<double> rmin(static_cast<std::size_t>(sample_count));
  std::vector<double> s(static_cast<std::size_t>(sample_count));
  std::vector<double> r2(static_cast<std::size_t>(sample_count));
  for (int i = 0; i < sample_count; ++i) {
    Eigen::VectorXd x = ball(), y = ball();
    while ((x - y).norm() < 1e-12) y = ball();
    const Eigen::VectorXd diff = x - y;
    rate[static_cast<std::size_t>(i)] =
        (drift(x) - drift(y)).dot(diff) / diff.squaredNorm();
    rmin[static_cast<std::size_t>(i)] = std::min(x.norm(), y.norm());
    s[static_cast<std::size_t>(i)] = drift(x).dot(x);
    r2[static_cast<std::size_t>(i)] = x.squaredNorm();
    xs[static_cast<std::size_t>(i)] = std::move(x);
    ys[static_cast<std::size_t>(i)] = std::move(y);
  }

  DriftConditionReport rep;
  rep.q = q;

  const int grid = 32;
  for (int k = 0; k <= grid; ++k) {
    const double rk = radius * k / grid;
    double worst = -std::numeric_limits<double>::infinity();
    int outside = 0;
    for (int i = 0; i < sample_count; ++i) {
      if (rmin[static_cast<std::size_t>(i)] >= rk) {
        ++outside;
        worst = std::max(worst, rate[static_cast<std::size_t>(i)]);
      }
    }
    if (outside < 16 && k > 0) break;
    if (worst < 0.0) {
      rep.contraction_holds = true;
      rep.kappa = -worst;
      rep.radius = rk;
      double expand = 0.0;
      for (int i = 0; i < sample_count; ++i)
        if (rmin[static_cast<std::size_t>(i)] < rk)
          expand = std::max(expand, rate[static_cast<std::size_t>(i)]);
      rep.lambda = expand;
      break;
    }
  }
  if (!rep.contraction_holds) {
    int arg = 0;
    for (int i = 1; i < sample_count; ++i)
      if (rate[static_cast<std::size_t>(i)] >
          rate[static_cast<std::size_t>(arg)])
        arg = i;
    rep.violation_x = xs[static_cast<std::size_t>(arg)];
    rep.violation_y = ys[static_cast<std::size_t>(arg)];
    rep.violation_rate = rate[static_cast<std::size_t>(arg)];
  }

  // least squares of <b(x),x> against (1, |x|^2)
  double mr = 0.0, ms = 0.0;
  for (int i = 0; i < sample_count; ++i) {
    mr += r2[static_cast<std::size_t>(i)];
    ms += s[static_cast<std::size_t>(i)];
  }
  mr /= sample_count;
  ms /= sample_count;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < sample_count; ++i) {
    const double dr = r2[static_cast<std::size_t>(i)] - mr;
    num += dr * (s[static_cast<std::size_t>(i)] - ms);
    den += dr * dr;
  }
  const double slope = den > 0.0 ? num / den : 0.0;
  rep.hajek_kappa_bar = -slope;
  double low = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < sample_count; ++i)
    low = std::max(low, s[static_cast<std::size_t>(i)] +
                            rep.hajek_kappa_bar *
                                r2[static_cast<std::size_t>(i)]);
  rep.hajek_kappa_low = low;
  rep.hajek_holds = rep.hajek_kappa_bar > 0.0;
  return rep;
}

}  // namespace ergolab
