#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <unordered_map>

#include "ergolab/occupation.hpp"

namespace ergolab {

// Sparse multiscale histogram over the dyadic ring/cell system.
//
// Ring n is the l-infinity annulus (-2^n, 2^n]^d minus (-2^(n-1), 2^(n-1)]^d
// (ring 0 is the full cube (-1,1]^d).  Within ring n, level l tiles the
// enclosing cube (-2^n, 2^n]^d into 2^(d*l) half-open translates of side
// 2^(n+1-l).  A cell is addressed by the Morton interleave of its d
// per-coordinate indices, so the children of cell c at the next level are
// exactly (c << d) | 0 .. (c << d) | (2^d - 1).
//
// counts maps packed (ring, level, cell) keys to mass.  Mass beyond ring
// max_ring is accumulated in overflow_mass and not binned.
struct DyadicHistogram {
  int dim = 0;
  int max_ring = 0;
  int depth = 0;
  std::unordered_map<std::uint64_t, double> counts;
  double overflow_mass = 0.0;

  static std::uint64_t key(int ring, int level, std::uint64_t cell);

  double cell_mass(int ring, int level, std::uint64_t cell) const;
  // Level-0 mass of ring n (the whole annulus is one level-0 cell).
  double ring_mass(int ring) const;
  bool same_geometry(const DyadicHistogram& other) const;
};

// Morton interleave of d cell coordinates, bit b of coordinate j landing at
// bit b*d + j.  Requires bits*dim <= 40.
std::uint64_t morton_encode(const Eigen::Ref<const Eigen::ArrayXi>& idx,
                            int bits);

// Bin an equal-weight point set.  Each point lands in exactly one cell per
// level of its ring; points beyond max_ring contribute to overflow_mass.
// depth*dim > 20 or a non-finite coordinate is an error.
DyadicHistogram histogramize(const Eigen::MatrixXd& points, int max_ring,
                             int depth);
DyadicHistogram histogramize(const OccupationMeasure& mu, int max_ring,
                             int depth);

// Exact cell masses of a Gaussian with independent coordinates.  Cell mass
// is the product of per-coordinate interval masses minus the part inside the
// inner cube of the ring; coarse levels are summed from the finest level so
// the nesting identity holds exactly as stored.
DyadicHistogram histogramize_gaussian_diag(const Eigen::VectorXd& mean,
                                           const Eigen::VectorXd& variance,
                                           int max_ring, int depth);

// Truncated multiscale sum
//   S = sum_n 2^(p*n) sum_l 2^(-p*l) sum_cells |mu(cell) - nu(cell)|
// over rings 0..max_ring and levels 0..depth, plus bounds on what the
// truncation discarded.  level_residual uses the stored ring masses and the
// geometric tail of 2^(-p*l).  ring_residual needs a moment order q > p and
// the q-th moments of both measures (tail mass of ring n is at most
// M_q * 2^(-(n-1)q)); the overload without them reports 0 when neither
// histogram has overflow mass and +infinity otherwise.
struct FgSum {
  double value = 0.0;
  double ring_residual = 0.0;
  double level_residual = 0.0;
};

FgSum fg_multiscale_sum(const DyadicHistogram& h1, const DyadicHistogram& h2,
                        double p);
FgSum fg_multiscale_sum(const DyadicHistogram& h1, const DyadicHistogram& h2,
                        double p, double q, double moment_q_1,
                        double moment_q_2);

// Exact W_p between two weighted point measures on the line: the monotone
// quantile coupling, integrating |F_mu^-1 - F_nu^-1|^p du piecewise between
// merged breakpoints of the two cumulative masses.  Weights must each sum
// to 1.  Returns the distance (p-th root taken).
double wasserstein_1d_exact(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& weight_x,
                            const Eigen::VectorXd& y,
                            const Eigen::VectorXd& weight_y, double p);
// Equal-weight overloads; occupation measures must be 1-dimensional.
double wasserstein_1d_exact(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            double p);
double wasserstein_1d_exact(const OccupationMeasure& mu,
                            const OccupationMeasure& nu, double p);

// Exact W_1 between the empirical measure of a point set and a Gaussian,
// via the closed-form integral of |F_n(x) - Phi((x-mean)/sd)| using the
// antiderivative z*Phi(z) + phi(z).
double wasserstein_1d_gaussian(const Eigen::VectorXd& x, double mean,
                               double sd);

// Exact W_p for small equal-mass point sets in any dimension: optimal
// assignment on the cost matrix |x_i - y_j|^p (shortest augmenting paths,
// O(n^3)).  Supports at most 64 points per side, equal counts.
double wasserstein_exact_small(const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& y, double p);

// The series L_t(u) = sum_l 2^(-p*l) min(u^(1/(2beta)),
// (u/t)^(1/2) 2^(d*l*(1-beta))) evaluated exactly: terms are summed up to
// the tipping level where the constant branch takes over, then the
// geometric remainder is added in closed form.  bound is the matching
// case upper bound (p vs d(1-beta)) without its unspecified constant.
struct LtValue {
  double series = 0.0;
  double bound = 0.0;
};

LtValue lt_function(double u, double t, double p, double beta, int d);

// Sparse triplet serialization (header line, then one "ring,level,cell,mass"
// row per nonzero cell, full double precision).
void save_histogram(const DyadicHistogram& h, const std::string& path);
DyadicHistogram load_histogram(const std::string& path);

}  // namespace ergolab
