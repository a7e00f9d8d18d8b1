#include "ergolab/targets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ergolab/noise.hpp"
#include "ergolab/rng.hpp"
#include "normal_detail.hpp"

namespace ergolab {

namespace {

void check_variance(double variance, const char* who) {
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument(std::string(who) +
                                ": variance must be positive and finite");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Canonical text form of a surrogate request, used only to key the cache.
// Refuses specs whose behaviour lives in a std::function.
std::string describe_request(const ProcessSpec& process, double t_burn,
                             int sample_count, std::uint64_t seed) {
  std::ostringstream out;
  const std::string drift_tag = process.drift.tag();
  if (drift_tag == "custom") {
    throw std::invalid_argument(
        "surrogate cache: a custom drift has no serializable description");
  }
  if (process.diffusion.tag() != "constant") {
    throw std::invalid_argument(
        "surrogate cache: a state-dependent diffusion has no serializable "
        "description");
  }
  out << "drift=" << drift_tag;
  if (const auto* lin = std::get_if<LinearDrift>(&process.drift.kind)) {
    out << ',' << fmt(lin->rate);
  } else if (const auto* dw =
                 std::get_if<DoubleWellDrift>(&process.drift.kind)) {
    out << ',' << fmt(dw->lambda_nc) << ',' << fmt(dw->kappa) << ','
        << fmt(dw->radius);
  } else if (const auto* wmr =
                 std::get_if<WeakMeanRevertingDrift>(&process.drift.kind)) {
    out << ',' << fmt(wmr->exponent) << ',' << fmt(wmr->strength) << ','
        << fmt(wmr->inner_radius);
  }
  const Eigen::MatrixXd sigma = process.diffusion.eval(process.x0);
  out << ";sigma=" << sigma.rows() << 'x' << sigma.cols();
  for (int i = 0; i < sigma.rows(); ++i) {
    for (int j = 0; j < sigma.cols(); ++j) out << ',' << fmt(sigma(i, j));
  }
  out << ";x0=";
  for (int i = 0; i < process.x0.size(); ++i) {
    if (i) out << ',';
    out << fmt(process.x0(i));
  }
  out << ";dt=" << fmt(process.dt);
  out << ";fractional=" << (process.fractional ? 1 : 0);
  if (process.fractional) out << ";hurst=" << fmt(process.hurst);
  out << ";t_burn=" << fmt(t_burn);
  out << ";count=" << sample_count;
  out << ";seed=" << seed;
  return out.str();
}

std::string fnv_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

Eigen::MatrixXd run_terminal_states(const ProcessSpec& process, double t_burn,
                                    int sample_count, std::uint64_t seed) {
  if (!(t_burn >= 1.0)) {
    throw std::invalid_argument(
        "surrogate_invariant: t_burn must be at least 1");
  }
  if (sample_count < 1) {
    throw std::invalid_argument(
        "surrogate_invariant: sample_count must be positive");
  }
  if (!(process.dt > 0.0)) {
    throw std::invalid_argument("surrogate_invariant: dt must be positive");
  }
  const int steps =
      static_cast<int>(std::ceil(t_burn / process.dt - 1e-12));
  Eigen::MatrixXd points(sample_count,
                         static_cast<int>(process.x0.size()));
  // One circulant factorization serves every replication when the driving
  // noise is fractional.
  std::unique_ptr<FbmSampler> sampler;
  if (process.fractional) {
    sampler = std::make_unique<FbmSampler>(
        FbmSpec{process.hurst, process.dt, steps});
  }
  for (int r = 0; r < sample_count; ++r) {
    const PathSample path = simulate_process(
        process, steps, child_seed(seed, static_cast<std::uint64_t>(r)),
        process.x0, sampler.get());
    points.row(r) = path.states.row(path.states.rows() - 1);
  }
  return points;
}

const EmpiricalSurrogate& as_surrogate(const TargetLaw& law,
                                       const char* who) {
  const auto* s = std::get_if<EmpiricalSurrogate>(&law.kind);
  if (s == nullptr) {
    throw std::invalid_argument(std::string(who) +
                                ": target is not a surrogate");
  }
  return *s;
}

}  // namespace

int TargetLaw::dim() const {
  struct Visitor {
    int operator()(const Gaussian1D&) const { return 1; }
    int operator()(const GaussianDiag& g) const {
      return static_cast<int>(g.mean.size());
    }
    int operator()(const EmpiricalSurrogate& s) const {
      return static_cast<int>(s.points.cols());
    }
  };
  return std::visit(Visitor{}, kind);
}

std::string TargetLaw::tag() const {
  struct Visitor {
    std::string operator()(const Gaussian1D&) const { return "gaussian-1d"; }
    std::string operator()(const GaussianDiag&) const {
      return "gaussian-diag";
    }
    std::string operator()(const EmpiricalSurrogate&) const {
      return "surrogate";
    }
  };
  return std::visit(Visitor{}, kind);
}

TargetLaw TargetLaw::gaussian(double mean, double variance) {
  check_variance(variance, "gaussian target");
  if (!std::isfinite(mean)) {
    throw std::invalid_argument("gaussian target: mean must be finite");
  }
  return TargetLaw{Gaussian1D{mean, variance}};
}

TargetLaw TargetLaw::gaussian_diag(const Eigen::VectorXd& mean,
                                   const Eigen::VectorXd& variance) {
  if (mean.size() == 0 || mean.size() != variance.size()) {
    throw std::invalid_argument(
        "gaussian target: mean and variance need matching nonzero length");
  }
  for (int i = 0; i < variance.size(); ++i) {
    check_variance(variance(i), "gaussian target");
    if (!std::isfinite(mean(i))) {
      throw std::invalid_argument("gaussian target: mean must be finite");
    }
  }
  return TargetLaw{GaussianDiag{mean, variance}};
}

TargetLaw TargetLaw::surrogate(EmpiricalSurrogate s) {
  if (s.points.rows() == 0 || s.points.cols() == 0) {
    throw std::invalid_argument("surrogate target: empty point cloud");
  }
  if (!s.points.allFinite()) {
    throw std::invalid_argument("surrogate target: points must be finite");
  }
  return TargetLaw{std::move(s)};
}

TargetLaw ou_invariant(double lambda, double sigma) {
  if (!(lambda > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument(
        "ou_invariant: lambda and sigma must be positive");
  }
  return TargetLaw::gaussian(0.0, sigma * sigma / (2.0 * lambda));
}

TargetLaw fou_invariant(double lambda, double sigma, double hurst) {
  if (!(lambda > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument(
        "fou_invariant: lambda and sigma must be positive");
  }
  if (!(hurst > 0.0) || !(hurst < 1.0)) {
    throw std::invalid_argument("fou_invariant: hurst must lie in (0,1)");
  }
  const double variance = sigma * sigma * std::pow(lambda, -2.0 * hurst) *
                          hurst * std::tgamma(2.0 * hurst);
  return TargetLaw::gaussian(0.0, variance);
}

TargetLaw surrogate_invariant(const ProcessSpec& process, double t_burn,
                              int sample_count, std::uint64_t seed) {
  EmpiricalSurrogate s;
  s.points = run_terminal_states(process, t_burn, sample_count, seed);
  s.t_burn = t_burn;
  s.seed = seed;
  s.provenance = process.drift.tag() + "/" + process.diffusion.tag() +
                 (process.fractional ? "/fractional" : "/brownian") +
                 " run to t=" + fmt(t_burn);
  return TargetLaw::surrogate(std::move(s));
}

TargetLaw surrogate_invariant(const ProcessSpec& process, double t_burn,
                              int sample_count, std::uint64_t seed,
                              const std::string& cache_dir) {
  const std::string request =
      describe_request(process, t_burn, sample_count, seed);
  const std::filesystem::path file =
      std::filesystem::path(cache_dir) /
      ("surrogate_" + fnv_hex(request) + ".csv");
  if (std::filesystem::exists(file)) {
    const OccupationMeasure cloud = load_point_cloud(file.string());
    EmpiricalSurrogate s;
    s.points = cloud.points;
    s.t_burn = t_burn;
    s.seed = seed;
    s.provenance = "cache " + file.filename().string();
    return TargetLaw::surrogate(std::move(s));
  }
  TargetLaw law = surrogate_invariant(process, t_burn, sample_count, seed);
  std::filesystem::create_directories(cache_dir);
  const auto& s = std::get<EmpiricalSurrogate>(law.kind);
  OccupationMeasure cloud;
  cloud.points = s.points;
  cloud.t_effective = t_burn;
  cloud.path_seed = seed;
  save_point_cloud(cloud, file.string());
  return law;
}

double quantile(const TargetLaw& law, double u) {
  if (!(u > 0.0) || !(u < 1.0)) {
    throw std::invalid_argument("quantile: u must lie in (0,1)");
  }
  if (law.dim() != 1) {
    throw std::invalid_argument(
        "quantile: only one-dimensional targets have a quantile function");
  }
  struct Visitor {
    double u;
    double operator()(const Gaussian1D& g) const {
      return g.mean + std::sqrt(g.variance) * detail::normal_quantile(u);
    }
    double operator()(const GaussianDiag& g) const {
      return g.mean(0) +
             std::sqrt(g.variance(0)) * detail::normal_quantile(u);
    }
    double operator()(const EmpiricalSurrogate& s) const {
      std::vector<double> values(s.points.data(),
                                 s.points.data() + s.points.rows());
      std::sort(values.begin(), values.end());
      const auto n = static_cast<double>(values.size());
      auto index = static_cast<std::ptrdiff_t>(std::ceil(u * n)) - 1;
      index = std::clamp<std::ptrdiff_t>(
          index, 0, static_cast<std::ptrdiff_t>(values.size()) - 1);
      return values[static_cast<std::size_t>(index)];
    }
  };
  return std::visit(Visitor{u}, law.kind);
}

Eigen::MatrixXd sample(const TargetLaw& law, int n, std::uint64_t seed) {
  if (n < 1) {
    throw std::invalid_argument("sample: n must be positive");
  }
  Rng rng(seed);
  Eigen::MatrixXd out(n, law.dim());
  if (const auto* g = std::get_if<Gaussian1D>(&law.kind)) {
    const double sd = std::sqrt(g->variance);
    for (int i = 0; i < n; ++i) out(i, 0) = g->mean + sd * rng.normal();
  } else if (const auto* gd = std::get_if<GaussianDiag>(&law.kind)) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < out.cols(); ++j) {
        out(i, j) = gd->mean(j) + std::sqrt(gd->variance(j)) * rng.normal();
      }
    }
  } else {
    const auto& s = std::get<EmpiricalSurrogate>(law.kind);
    const auto rows = static_cast<std::uint64_t>(s.points.rows());
    for (int i = 0; i < n; ++i) {
      out.row(i) = s.points.row(static_cast<int>(rng.below(rows)));
    }
  }
  return out;
}

double poincare_decay(double c, double t) {
  if (!(c > 0.0)) {
    throw std::invalid_argument(
        "poincare_decay: the constant must be positive");
  }
  if (!(t >= 0.0)) {
    throw std::invalid_argument("poincare_decay: t must be nonnegative");
  }
  return std::exp(-2.0 * t / c);
}

}  // namespace ergolab
