#pragma once

#include "ergolab/sde.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace ergolab {

// Time average of a path over a window: equal point masses on the retained
// grid states. Points are kept raw here; any binning happens downstream.
struct OccupationMeasure {
  Eigen::MatrixXd points;  // count x d
  double t_effective = 0.0;
  std::uint64_t path_seed = 0;
  double burn_in = 0.0;

  int count() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

// Uniform weights on every thinning-th state with time >= burn_in.
// t_effective is the represented window length (horizon - burn_in).
OccupationMeasure build_occupation(const PathSample& path, double burn_in,
                                   int thinning);

// q-th moment of the Euclidean norm under the measure.
double moment(const OccupationMeasure& mu, double q);
double moment(const Eigen::MatrixXd& points, double q);

// Index of the sup-norm dyadic ring holding x: the smallest n >= 0 with
// every coordinate in (-2^n, 2^n]. Half-open on the left, so e.g. in 1D the
// value 2 sits in ring 1 while -2 sits in ring 2.
int ring_index(const Eigen::Ref<const Eigen::RowVectorXd>& x);

// Fraction of mass in ring n; the masses over all n sum to 1.
double ring_mass(const OccupationMeasure& mu, int n);

// Point-cloud cache format: one header line "d,count,t_effective" then one
// comma-separated row per point, full double precision.
void save_point_cloud(const OccupationMeasure& mu, const std::string& path);
OccupationMeasure load_point_cloud(const std::string& path);

}  // namespace ergolab
