#include "ergolab/experiment.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ergolab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* what) {
  throw std::invalid_argument("config: key '" + key + "' needs " + what +
                              ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& value) {
  const char* s = value.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0') bad_value(key, value, "a number");
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  const char* s = value.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(s, &end, 10);
  if (end == s || *end != '\0') bad_value(key, value, "an integer");
  return v;
}

std::uint64_t to_seed(const std::string& key, const std::string& value) {
  const char* s = value.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0' || value.find('-') != std::string::npos)
    bad_value(key, value, "a nonnegative integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "0" || value == "false") return false;
  if (value == "1" || value == "true") return true;
  bad_value(key, value, "0 or 1");
}

std::string fnv_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

const char* target_name(TargetDirective t) {
  switch (t) {
    case TargetDirective::Auto: return "auto";
    case TargetDirective::Gaussian: return "gaussian";
    default: return "surrogate";
  }
}

}  // namespace

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::Exact1D: return "exact-1d";
    case Metric::FgSum: return "fg-sum";
    default: return "exact-small";
  }
}

Metric parse_metric(const std::string& name) {
  if (name == "exact-1d") return Metric::Exact1D;
  if (name == "fg-sum") return Metric::FgSum;
  if (name == "exact-small") return Metric::ExactSmall;
  throw std::invalid_argument(
      "config: metric must be exact-1d, fg-sum or exact-small, got '" + name +
      "'");
}

ExperimentConfig parse_config_text(const std::string& text) {
  struct Entry {
    std::string value;
    bool used = false;
  };
  std::map<std::string, Entry> kv;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " has no '='");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " has an empty key");
    if (value.empty())
      throw std::invalid_argument("config: key '" + key +
                                  "' has an empty value");
    if (!kv.emplace(key, Entry{value, false}).second)
      throw std::invalid_argument("config: duplicate key '" + key + "'");
  }

  auto take = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    it->second.used = true;
    return &it->second.value;
  };

  ExperimentConfig cfg;
  if (const auto* v = take("dim")) cfg.dim = static_cast<int>(to_int("dim", *v));
  if (const auto* v = take("drift")) cfg.drift = *v;
  if (const auto* v = take("drift.rate")) cfg.drift_rate = to_double("drift.rate", *v);
  if (const auto* v = take("drift.lambda")) cfg.drift_lambda = to_double("drift.lambda", *v);
  if (const auto* v = take("drift.kappa")) cfg.drift_kappa = to_double("drift.kappa", *v);
  if (const auto* v = take("drift.radius")) cfg.drift_radius = to_double("drift.radius", *v);
  if (const auto* v = take("drift.exponent")) cfg.drift_exponent = to_double("drift.exponent", *v);
  if (const auto* v = take("drift.strength")) cfg.drift_strength = to_double("drift.strength", *v);
  if (const auto* v = take("drift.inner")) cfg.drift_inner = to_double("drift.inner", *v);
  if (const auto* v = take("sigma")) cfg.sigma = to_double("sigma", *v);
  if (const auto* v = take("x0")) cfg.x0 = to_double("x0", *v);
  if (const auto* v = take("start")) {
    if (*v == "fixed") cfg.start = StartMode::Fixed;
    else if (*v == "stationary") cfg.start = StartMode::Stationary;
    else
      throw std::invalid_argument(
          "config: start must be fixed or stationary, got '" + *v + "'");
  }
  if (const auto* v = take("fractional")) cfg.fractional = to_bool("fractional", *v);
  if (const auto* v = take("hurst")) cfg.hurst = to_double("hurst", *v);
  if (const auto* v = take("dt")) cfg.dt = to_double("dt", *v);
  if (const auto* v = take("burn_in")) cfg.burn_in = to_double("burn_in", *v);
  if (const auto* v = take("t.min")) cfg.t_min = to_double("t.min", *v);
  if (const auto* v = take("t.max")) cfg.t_max = to_double("t.max", *v);
  if (const auto* v = take("t.ratio")) cfg.t_ratio = to_double("t.ratio", *v);
  if (const auto* v = take("replications"))
    cfg.replications = static_cast<int>(to_int("replications", *v));
  if (const auto* v = take("seed")) cfg.seed = to_seed("seed", *v);
  if (const auto* v = take("p")) cfg.p = to_double("p", *v);
  if (const auto* v = take("metric")) cfg.metric = parse_metric(*v);
  if (const auto* v = take("fg.max_ring"))
    cfg.fg_max_ring = static_cast<int>(to_int("fg.max_ring", *v));
  if (const auto* v = take("fg.depth"))
    cfg.fg_depth = static_cast<int>(to_int("fg.depth", *v));
  if (const auto* v = take("small.points"))
    cfg.small_points = static_cast<int>(to_int("small.points", *v));
  if (const auto* v = take("target")) {
    if (*v == "auto") cfg.target = TargetDirective::Auto;
    else if (*v == "gaussian") cfg.target = TargetDirective::Gaussian;
    else if (*v == "surrogate") cfg.target = TargetDirective::Surrogate;
    else
      throw std::invalid_argument(
          "config: target must be auto, gaussian or surrogate, got '" + *v +
          "'");
  }
  if (const auto* v = take("target.mean")) cfg.target_mean = to_double("target.mean", *v);
  if (const auto* v = take("target.variance"))
    cfg.target_variance = to_double("target.variance", *v);
  if (const auto* v = take("target.t_burn"))
    cfg.target_t_burn = to_double("target.t_burn", *v);
  if (const auto* v = take("target.count"))
    cfg.target_count = static_cast<int>(to_int("target.count", *v));
  if (const auto* v = take("theory")) {
    if (*v == "auto") cfg.theory = TheoryDirective::Auto;
    else if (*v == "none") cfg.theory = TheoryDirective::None;
    else
      throw std::invalid_argument("config: theory must be auto or none, got '" +
                                  *v + "'");
  }
  if (const auto* v = take("theory.tolerance"))
    cfg.slope_tolerance = to_double("theory.tolerance", *v);
  if (const auto* v = take("out")) cfg.out_dir = *v;
  if (const auto* v = take("jobs")) cfg.jobs = static_cast<int>(to_int("jobs", *v));

  for (const auto& [key, entry] : kv)
    if (!entry.used)
      throw std::invalid_argument("config: unknown key '" + key + "'");

  validate_config(cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "burn_in=" << fmt(cfg.burn_in) << '\n'
      << "dim=" << cfg.dim << '\n'
      << "drift=" << cfg.drift << '\n'
      << "drift.exponent=" << fmt(cfg.drift_exponent) << '\n'
      << "drift.inner=" << fmt(cfg.drift_inner) << '\n'
      << "drift.kappa=" << fmt(cfg.drift_kappa) << '\n'
      << "drift.lambda=" << fmt(cfg.drift_lambda) << '\n'
      << "drift.radius=" << fmt(cfg.drift_radius) << '\n'
      << "drift.rate=" << fmt(cfg.drift_rate) << '\n'
      << "drift.strength=" << fmt(cfg.drift_strength) << '\n'
      << "dt=" << fmt(cfg.dt) << '\n'
      << "fg.depth=" << cfg.fg_depth << '\n'
      << "fg.max_ring=" << cfg.fg_max_ring << '\n'
      << "fractional=" << (cfg.fractional ? 1 : 0) << '\n'
      << "hurst=" << fmt(cfg.hurst) << '\n'
      << "metric=" << metric_name(cfg.metric) << '\n'
      << "p=" << fmt(cfg.p) << '\n'
      << "replications=" << cfg.replications << '\n'
      << "seed=" << cfg.seed << '\n'
      << "sigma=" << fmt(cfg.sigma) << '\n'
      << "small.points=" << cfg.small_points << '\n'
      << "start=" << (cfg.start == StartMode::Fixed ? "fixed" : "stationary")
      << '\n'
      << "t.max=" << fmt(cfg.t_max) << '\n'
      << "t.min=" << fmt(cfg.t_min) << '\n'
      << "t.ratio=" << fmt(cfg.t_ratio) << '\n'
      << "target=" << target_name(cfg.target) << '\n'
      << "target.count=" << cfg.target_count << '\n'
      << "target.mean=" << fmt(cfg.target_mean) << '\n'
      << "target.t_burn=" << fmt(cfg.target_t_burn) << '\n'
      << "target.variance=" << fmt(cfg.target_variance) << '\n'
      << "theory=" << (cfg.theory == TheoryDirective::Auto ? "auto" : "none")
      << '\n'
      << "theory.tolerance=" << fmt(cfg.slope_tolerance) << '\n'
      << "x0=" << fmt(cfg.x0) << '\n';
  return out.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  return fnv_hex(serialize_config(cfg));
}

ProcessSpec build_process(const ExperimentConfig& cfg) {
  ProcessSpec process;
  if (cfg.drift == "linear") {
    process.drift = DriftSpec::linear(cfg.drift_rate);
  } else if (cfg.drift == "double-well") {
    process.drift = DriftSpec::double_well(cfg.drift_lambda, cfg.drift_kappa,
                                           cfg.drift_radius);
  } else if (cfg.drift == "weak") {
    process.drift = DriftSpec::weak_mean_reverting(
        cfg.drift_exponent, cfg.drift_strength, cfg.drift_inner);
  } else {
    throw std::invalid_argument(
        "config: drift must be linear, double-well or weak, got '" +
        cfg.drift + "'");
  }
  if (cfg.sigma < 0.0)
    throw std::invalid_argument("config: sigma must be nonnegative");
  process.diffusion = cfg.sigma == 0.0
                          ? DiffusionSpec::zero(cfg.dim)
                          : DiffusionSpec::scalar(cfg.dim, cfg.sigma);
  process.x0 = Eigen::VectorXd::Constant(cfg.dim, cfg.x0);
  process.dt = cfg.dt;
  process.fractional = cfg.fractional;
  process.hurst = cfg.hurst;
  return process;
}

std::vector<double> time_grid(const ExperimentConfig& cfg) {
  if (!(cfg.dt > 0.0))
    throw std::invalid_argument("config: dt must be positive");
  if (!(cfg.t_min > 0.0))
    throw std::invalid_argument("config: t.min must be positive");
  if (!(cfg.t_max >= cfg.t_min))
    throw std::invalid_argument("config: t.max must be at least t.min");
  if (!(cfg.t_ratio > 1.0))
    throw std::invalid_argument("config: t.ratio must exceed 1");

  std::vector<double> grid;
  for (double t = cfg.t_min; t <= cfg.t_max * (1.0 + 1e-9); t *= cfg.t_ratio) {
    const long long steps = std::llround(t / cfg.dt);
    const double snapped = static_cast<double>(steps) * cfg.dt;
    if (steps < 1 || std::abs(snapped - t) > 1e-6 * std::max(t, 1.0))
      throw std::invalid_argument("config: grid time " + fmt(t) +
                                  " does not sit on the dt lattice");
    if (!grid.empty() && snapped <= grid.back())
      throw std::invalid_argument(
          "config: grid times collapse; dt is too coarse for t.ratio");
    grid.push_back(snapped);
  }
  if (grid.size() < 3)
    throw std::invalid_argument(
        "config: the time grid needs at least 3 points to fit a slope");
  return grid;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.dim < 1) throw std::invalid_argument("config: dim must be positive");
  if (cfg.replications < 8)
    throw std::invalid_argument("config: at least 8 replications");
  if (!(cfg.p >= 1.0))
    throw std::invalid_argument("config: p must be at least 1");
  if (!(cfg.burn_in >= 0.0))
    throw std::invalid_argument("config: burn_in must be nonnegative");
  if (!(cfg.slope_tolerance >= 0.0))
    throw std::invalid_argument("config: theory.tolerance must be nonnegative");
  if (cfg.jobs < 1) throw std::invalid_argument("config: jobs must be positive");

  build_process(cfg);  // validates drift and diffusion parameters
  if (cfg.fractional && !(cfg.hurst > 0.0 && cfg.hurst < 1.0))
    throw std::invalid_argument("config: hurst must lie in (0,1)");
  if (cfg.drift == "linear" && !(cfg.drift_rate * cfg.dt < 1.0))
    throw std::invalid_argument(
        "config: linear drift needs drift.rate * dt < 1");

  const std::vector<double> grid = time_grid(cfg);
  if (!(cfg.burn_in < grid.front()))
    throw std::invalid_argument(
        "config: burn_in must be smaller than the first grid time");

  switch (cfg.metric) {
    case Metric::Exact1D:
      if (cfg.dim != 1)
        throw std::invalid_argument(
            "config: metric exact-1d needs dim = 1; use fg-sum or "
            "exact-small in higher dimension");
      break;
    case Metric::FgSum:
      if (cfg.fg_depth < 1 || cfg.fg_max_ring < 0)
        throw std::invalid_argument(
            "config: fg.depth must be positive and fg.max_ring nonnegative");
      if (cfg.fg_depth * cfg.dim > 20)
        throw std::invalid_argument(
            "config: fg.depth * dim must stay at or below 20");
      break;
    case Metric::ExactSmall:
      if (cfg.small_points < 1 || cfg.small_points > 64)
        throw std::invalid_argument(
            "config: small.points must lie in [1, 64]");
      break;
  }

  switch (cfg.target) {
    case TargetDirective::Gaussian:
      if (!(cfg.target_variance > 0.0))
        throw std::invalid_argument(
            "config: target.variance must be positive");
      break;
    case TargetDirective::Surrogate:
      if (!(cfg.target_t_burn >= 1.0))
        throw std::invalid_argument(
            "config: target.t_burn must be at least 1");
      if (cfg.target_count < 1)
        throw std::invalid_argument("config: target.count must be positive");
      break;
    case TargetDirective::Auto:
      if (cfg.drift != "linear" || cfg.sigma == 0.0)
        throw std::invalid_argument(
            "config: no closed-form invariant law for this process; set "
            "target = surrogate");
      break;
  }
}

}  // namespace ergolab
