#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergolab/covariance.hpp"
#include "ergolab/experiment.hpp"
#include "ergolab/occupation.hpp"
#include "ergolab/rng.hpp"

namespace {

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config) {
  auto* c = cmd->add_option("--config", opts.config,
                            "experiment config file (flat key = value)");
  if (needs_config) c->required();
  cmd->add_option("--seed", opts.seed, "override the base seed");
  cmd->add_option("--out", opts.out, "override the output directory");
  cmd->add_option("--jobs", opts.jobs, "worker threads for replications");
}

ergolab::ExperimentConfig load_config(const CommonOpts& opts) {
  ergolab::ExperimentConfig cfg = ergolab::parse_config(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.out) cfg.out_dir = *opts.out;
  if (opts.jobs) cfg.jobs = *opts.jobs;
  ergolab::validate_config(cfg);
  return cfg;
}

void print_rate(const char* label, const ergolab::RateResult& r, double p) {
  std::printf("  %-26s exponent %-10.6g mean-slope %-10.6g %s%s[%s]\n", label,
              r.exponent, -p * r.exponent, r.log_factor ? "log-factor " : "",
              r.strict ? "strict " : "", r.regime.c_str());
}

int cmd_simulate(const CommonOpts& opts) {
  const ergolab::ExperimentConfig cfg = load_config(opts);
  const std::vector<double> grid = ergolab::time_grid(cfg);
  const ergolab::PathSample path = ergolab::simulate_replication(cfg, 0);
  const ergolab::OccupationMeasure occ =
      ergolab::build_occupation(path, cfg.burn_in, 1);

  std::filesystem::create_directories(cfg.out_dir);
  const std::string file =
      cfg.out_dir + "/occupation_" + ergolab::config_hash(cfg) + ".csv";
  ergolab::save_point_cloud(occ, file);
  std::printf("simulated replication 0 (seed %llu) to t = %g\n",
              static_cast<unsigned long long>(ergolab::child_seed(cfg.seed, 0)),
              grid.back());
  std::printf("occupation measure: %d points in dimension %d, cached at %s\n",
              occ.count(), occ.dim(), file.c_str());
  return 0;
}

int cmd_rate(const CommonOpts& opts) {
  const ergolab::ExperimentConfig cfg = load_config(opts);
  const ergolab::RateResult resolved = ergolab::resolve_theory(cfg);
  std::printf("theory for this config (p = %g, dim = %d, %s):\n", cfg.p,
              cfg.dim, cfg.fractional ? "fractional" : "brownian");
  print_rate("resolved", resolved, cfg.p);

  std::printf("reference tables at this p and dim:\n");
  print_rate("spectral-gap limit",
             ergolab::limit_rate_wp(cfg.p, cfg.dim, 0.5, 0.5), cfg.p);
  for (const double q : {2.0 * cfg.p, 4.0 * cfg.p}) {
    ergolab::RegimeInput in;
    in.p = cfg.p;
    in.q = q;
    in.d = cfg.dim;
    in.beta = 0.5;
    in.gamma = 0.5;
    char label[40];
    std::snprintf(label, sizeof(label), "abstract table, q = %g", q);
    print_rate(label, ergolab::abstract_rate(in), cfg.p);
  }
  print_rate("mixing-only limit",
             ergolab::nonmarkov_limit(cfg.p, cfg.dim, 0.5), cfg.p);
  if (cfg.fractional) {
    print_rate("linear fractional 1d", ergolab::fou_rate(cfg.hurst, cfg.p),
               cfg.p);
    print_rate(
        "kernel-decay table",
        ergolab::fractional_rate(0.0, cfg.hurst, cfg.p, cfg.dim, 0.01),
        cfg.p);
  }
  return 0;
}

int cmd_verify(const CommonOpts& opts) {
  const ergolab::ExperimentConfig cfg = load_config(opts);
  const ergolab::ExperimentResult result = ergolab::run_experiment(cfg);
  const ergolab::ReportPaths paths = ergolab::emit_report(result, cfg);

  std::printf("%10s %14s %12s %5s  %s\n", "t", "mean", "se", "n",
              "seed range");
  for (const ergolab::ExperimentRow& row : result.rows)
    std::printf("%10g %14.6e %12.3e %5d  %llu..%llu\n", row.t, row.mean,
                row.se, row.n,
                static_cast<unsigned long long>(row.seed_first),
                static_cast<unsigned long long>(row.seed_last));
  std::printf("fitted slope %.4f +- %.4f\n", result.fit.slope,
              result.fit.slope_se);
  if (result.sampling_floor > 0.0)
    std::printf("surrogate sampling floor %.4e (W_p scale)\n",
                result.sampling_floor);
  std::printf("report %s\n", paths.csv.c_str());
  if (!paths.svg.empty()) std::printf("plot   %s\n", paths.svg.c_str());

  if (!result.verdict.applicable) {
    std::printf("no theory comparison requested\n");
    return 0;
  }
  std::printf("theory slope %.4f (tolerance %.2f): %s\n",
              result.verdict.theory_slope, result.verdict.tolerance,
              result.verdict.pass ? "PASS" : "FAIL");
  return result.verdict.pass ? 0 : 1;
}

int cmd_covcheck(const CommonOpts& opts) {
  const std::string out = opts.out.value_or("out");
  const std::uint64_t seed = opts.seed.value_or(8080u);
  const std::vector<double> rhos = {-0.5, -0.3, -0.1, 0.1, 0.3, 0.5};
  const std::vector<ergolab::HermiteCheckRow> rows =
      ergolab::hermite_check_grid(1.0, rhos, 20000, seed);

  std::filesystem::create_directories(out);
  const std::string file = out + "/hermite_report.csv";
  ergolab::write_hermite_report(rows, file);

  int failures = 0;
  for (const ergolab::HermiteCheckRow& row : rows) {
    if (!row.pass) ++failures;
    std::printf("%-16s %-16s rho %+0.2f  cov %+0.5f (se %.5f)  bound %.5f  %s\n",
                row.f.c_str(), row.g.c_str(), row.rho, row.estimate,
                row.standard_error, row.bound, row.pass ? "ok" : "VIOLATED");
  }
  std::printf("%zu pairs checked, %d violations, report %s\n", rows.size(),
              failures, file.c_str());
  return failures == 0 ? 0 : 1;
}

int cmd_plot(const CommonOpts& opts) {
  const ergolab::ExperimentConfig cfg = load_config(opts);
  const std::string csv = ergolab::report_csv_path(cfg);
  const std::vector<ergolab::ExperimentRow> rows =
      ergolab::read_report_csv(csv);

  ergolab::ExperimentResult result;
  result.rows = rows;
  result.p = cfg.p;
  std::vector<double> t, mean;
  for (const ergolab::ExperimentRow& row : rows) {
    t.push_back(row.t);
    mean.push_back(row.mean);
  }
  bool fittable = t.size() >= 3;
  for (const double m : mean)
    if (!(m > 0.0)) fittable = false;
  if (fittable) {
    result.fit = ergolab::fit_rate(t, mean);
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    result.fit = ergolab::RateFit{nan, nan, nan, nan};
  }
  if (cfg.theory == ergolab::TheoryDirective::Auto) {
    result.theory = ergolab::resolve_theory(cfg);
    result.verdict = ergolab::compare_to_theory(result, *result.theory, cfg.p,
                                                cfg.slope_tolerance);
  }

  const std::string svg = ergolab::plot_svg_path(cfg);
  ergolab::write_plot_svg(result, svg);
  std::printf("re-rendered %s from %s\n", svg.c_str(), csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ergolab: occupation-measure convergence laboratory"};
  app.require_subcommand(1);

  CommonOpts sim_opts, rate_opts, verify_opts, cov_opts, plot_opts;
  auto* sim = app.add_subcommand(
      "simulate", "run replication 0 and cache its occupation measure");
  add_common(sim, sim_opts, true);
  auto* rate =
      app.add_subcommand("rate", "print theoretical rate tables for a config");
  add_common(rate, rate_opts, true);
  auto* verify = app.add_subcommand(
      "verify", "run an experiment, emit reports, compare to theory");
  add_common(verify, verify_opts, true);
  auto* cov = app.add_subcommand(
      "covcheck", "Monte Carlo audit of the covariance inequality grid");
  add_common(cov, cov_opts, false);
  auto* plot =
      app.add_subcommand("plot", "re-render the SVG plot from a cached CSV");
  add_common(plot, plot_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are configuration errors
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_opts);
    if (rate->parsed()) return cmd_rate(rate_opts);
    if (verify->parsed()) return cmd_verify(verify_opts);
    if (cov->parsed()) return cmd_covcheck(cov_opts);
    if (plot->parsed()) return cmd_plot(plot_opts);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
