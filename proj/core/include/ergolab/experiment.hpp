#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergolab/rates.hpp"
#include "ergolab/sde.hpp"
#include "ergolab/targets.hpp"

namespace ergolab {

// How the distance between an occupation window and the target is measured.
// Exact1D is the quantile-coupling distance (dimension 1 only). FgSum is the
// truncated dyadic multiscale sum, comparable to W_p^p. ExactSmall thins the
// window to a small point set and solves the assignment problem against an
// equal-size draw from the target; its resolution is limited by that sample
// size, so it is a cross-check, not a precision instrument.
enum class Metric { Exact1D, FgSum, ExactSmall };

std::string metric_name(Metric m);
Metric parse_metric(const std::string& name);

enum class TargetDirective { Auto, Gaussian, Surrogate };
enum class TheoryDirective { Auto, None };

// Fixed starts every replication at x0. Stationary draws each replication's
// start from the resolved target law (for surrogate targets this picks a
// cloud point), which removes the equilibration transient from the windows.
enum class StartMode { Fixed, Stationary };

// One rate experiment, built from a flat key=value config file. The file
// format is line-oriented: `key = value`, `#` starts a comment, unknown or
// duplicate keys are errors. Defaults below apply to omitted keys.
//
//   dim            state dimension                       (default 1)
//   drift          linear | double-well | weak           (default linear)
//   drift.rate     linear rate                           (default 1)
//   drift.lambda   double-well expansion rate            (default 1)
//   drift.kappa    double-well contraction rate          (default 1)
//   drift.radius   double-well radius                    (default 1)
//   drift.exponent weak-drift exponent a in (0,1]        (default 1)
//   drift.strength weak-drift strength                   (default 1)
//   drift.inner    weak-drift blend radius               (default 0)
//   sigma          diffusion scale, 0 means no noise     (default 1)
//   x0             start value, broadcast over dim       (default 0)
//   start          fixed | stationary                    (default fixed)
//   fractional     0 | 1                                 (default 0)
//   hurst          Hurst index in (0,1)                  (default 0.5)
//   dt             step size                             (required)
//   burn_in        time discarded from every window      (default 0)
//   t.min, t.max   geometric time grid endpoints         (required)
//   t.ratio        grid ratio > 1                        (default 2)
//   replications   independent paths, at least 8         (default 8)
//   seed           base seed                             (default 1)
//   p              Wasserstein order, at least 1         (default 1)
//   metric         exact-1d | fg-sum | exact-small       (default exact-1d)
//   fg.max_ring    outermost dyadic ring                 (default 8)
//   fg.depth       finest level per ring                 (default 10)
//   small.points   point budget of exact-small, <= 64    (default 48)
//   target         auto | gaussian | surrogate           (default auto)
//   target.mean    gaussian target mean                  (default 0)
//   target.variance gaussian target variance             (default 1)
//   target.t_burn  surrogate horizon                     (default 32)
//   target.count   surrogate cloud size                  (default 4096)
//   theory         auto | none                           (default auto)
//   theory.tolerance one-sided slope slack               (default 0.1)
//   out            output directory                      (default "out")
//   jobs           worker threads for replications       (default 1)
struct ExperimentConfig {
  int dim = 1;
  std::string drift = "linear";
  double drift_rate = 1.0;
  double drift_lambda = 1.0;
  double drift_kappa = 1.0;
  double drift_radius = 1.0;
  double drift_exponent = 1.0;
  double drift_strength = 1.0;
  double drift_inner = 0.0;
  double sigma = 1.0;
  double x0 = 0.0;
  StartMode start = StartMode::Fixed;
  bool fractional = false;
  double hurst = 0.5;
  double dt = 0.0;
  double burn_in = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  double t_ratio = 2.0;
  int replications = 8;
  std::uint64_t seed = 1;
  double p = 1.0;
  Metric metric = Metric::Exact1D;
  int fg_max_ring = 8;
  int fg_depth = 10;
  int small_points = 48;
  TargetDirective target = TargetDirective::Auto;
  double target_mean = 0.0;
  double target_variance = 1.0;
  double target_t_burn = 32.0;
  int target_count = 4096;
  TheoryDirective theory = TheoryDirective::Auto;
  double slope_tolerance = 0.1;
  std::string out_dir = "out";
  int jobs = 1;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

// Canonical form: every scientific key in a fixed order, one per line,
// numbers at full precision. `out` and `jobs` are excluded because they do
// not affect the numbers. The content hash names all output files, so two
// configs agree on the hash exactly when they rerun the same experiment.
std::string serialize_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

void validate_config(const ExperimentConfig& cfg);

// Geometric grid t_min * ratio^k, clipped at t_max, each point snapped to
// the dt lattice. At least 3 points or the config is rejected.
std::vector<double> time_grid(const ExperimentConfig& cfg);

// The process the config describes (drift, sigma * I noise, start point).
ProcessSpec build_process(const ExperimentConfig& cfg);

// The reference law the windows are compared against. Auto picks the
// closed-form invariant law (linear drift with noise only) and refuses
// anything else; surrogate simulates target.count terminal states at seed
// child_seed(seed, 2^32 + 1), outside every replication seed.
TargetLaw resolve_target(const ExperimentConfig& cfg);

// Theoretical decay exponent of the distance itself (per W_p, not W_p^p).
RateResult resolve_theory(const ExperimentConfig& cfg);

struct ExperimentRow {
  double t = 0.0;
  double mean = 0.0;  // mean over replications of W_p^p (or the fg sum)
  double se = 0.0;    // standard error of that mean
  int n = 0;          // replications aggregated
  std::uint64_t seed_first = 0;  // derived seed of replication 0
  std::uint64_t seed_last = 0;   // derived seed of replication n-1
};

struct TheoryVerdict {
  double fitted_slope = 0.0;
  double fitted_se = 0.0;
  double theory_slope = 0.0;  // -p * exponent: the slope the means must beat
  double tolerance = 0.0;
  bool applicable = false;  // false when the config says theory = none
  bool pass = true;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  // Per-replication metric values, replications x grid points. Row r is the
  // full series of replication r, so prefixes of the replication set can be
  // compared across runs.
  Eigen::MatrixXd samples;
  RateFit fit;  // all NaN when any mean is zero (nothing to fit on log scale)
  std::optional<RateResult> theory;
  TheoryVerdict verdict;
  // Resolution limit of a surrogate target: a cloud of n points cannot be
  // approached closer than about its own sampling error, so reported means
  // plateau near this value (on the W_p scale) instead of decaying forever.
  // Zero for closed-form targets.
  double sampling_floor = 0.0;
  double p = 1.0;
  std::string hash;
};

// Runs one path per replication to the last grid point, builds every prefix
// window's occupation measure, measures it against the target, aggregates.
// Replication r runs on child_seed(cfg.seed, r), so extending the
// replication count keeps every earlier replication bit-identical. A
// diverged path aborts the run with the offending seed in the message.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// The exact path replication r of cfg runs on: same seed derivation, start
// resolution and noise setup as run_experiment, so a cached path can be
// replayed without rerunning the whole experiment.
PathSample simulate_replication(const ExperimentConfig& cfg, int r);

// One-sided slope test: pass iff fitted <= -p * theory.exponent + tolerance.
// Steeper-than-predicted decay passes; only a too-shallow slope fails.
TheoryVerdict compare_to_theory(const ExperimentResult& result,
                                const RateResult& theory, double p,
                                double slope_tolerance);

// --- reports ---------------------------------------------------------------

std::string report_csv_path(const ExperimentConfig& cfg);
std::string plot_svg_path(const ExperimentConfig& cfg);

// Schema "t,mean,se,n", full double precision, header always present.
void write_report_csv(const ExperimentResult& result, const std::string& path);
std::vector<ExperimentRow> read_report_csv(const std::string& path);

// Log-log scatter of the rows with exactly one fitted line (class "fit")
// and, when a theory slope is present, one dashed guide line (class
// "guide"). Needs at least two rows with positive mean.
void write_plot_svg(const ExperimentResult& result, const std::string& path);

struct ReportPaths {
  std::string csv;
  std::string svg;  // empty when the plot was impossible (no positive means)
};

// Writes the CSV and, when plottable, the SVG into cfg's output directory,
// creating it if needed. File names are derived from the config hash.
ReportPaths emit_report(const ExperimentResult& result,
                        const ExperimentConfig& cfg);

}  // namespace ergolab
