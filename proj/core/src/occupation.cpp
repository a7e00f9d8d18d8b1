#include "ergolab/occupation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ergolab {

OccupationMeasure build_occupation(const PathSample& path, double burn_in,
                                   int thinning) {
  if (path.steps() < 1)
    throw std::invalid_argument("occupation: path has no steps");
  if (burn_in < 0.0)
    throw std::invalid_argument("occupation: burn_in must be nonnegative");
  if (thinning < 1)
    throw std::invalid_argument("occupation: thinning must be at least 1");
  const double horizon = path.times.back();
  if (!(burn_in < horizon)) {
    std::ostringstream msg;
    msg << "occupation: burn_in " << burn_in << " leaves no window before the "
        << "horizon " << horizon;
    throw std::invalid_argument(msg.str());
  }

  const double cut = burn_in - 1e-12 * std::max(1.0, horizon);
  std::vector<int> keep;
  int met = 0;
  for (int k = 0; k < static_cast<int>(path.times.size()); ++k) {
    if (path.times[static_cast<std::size_t>(k)] < cut) continue;
    if (met % thinning == 0) keep.push_back(k);
    ++met;
  }
  if (keep.empty())
    throw std::invalid_argument("occupation: no states in the window");

  OccupationMeasure mu;
  mu.points = Eigen::MatrixXd(static_cast<int>(keep.size()), path.dim());
  for (std::size_t i = 0; i < keep.size(); ++i)
    mu.points.row(static_cast<int>(i)) = path.states.row(keep[i]);
  mu.t_effective = horizon - burn_in;
  mu.path_seed = path.seed;
  mu.burn_in = burn_in;
  return mu;
}

double moment(const Eigen::MatrixXd& points, double q) {
  if (!(q > 0.0)) throw std::invalid_argument("moment: q must be positive");
  if (points.rows() == 0)
    throw std::invalid_argument("moment: empty point set");
  double acc = 0.0;
  for (int i = 0; i < points.rows(); ++i)
    acc += std::pow(points.row(i).norm(), q);
  return acc / static_cast<double>(points.rows());
}

double moment(const OccupationMeasure& mu, double q) {
  return moment(mu.points, q);
}

int ring_index(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (!x.allFinite())
    throw std::invalid_argument("ring_index: non-finite coordinate");
  int n = 0;
  double bound = 1.0;  // exact powers of two
  for (;;) {
    bool inside = true;
    for (int i = 0; i < x.size(); ++i) {
      const double v = x(i);
      if (!(v > -bound && v <= bound)) {
        inside = false;
        break;
      }
    }
    if (inside) return n;
    ++n;
    bound *= 2.0;
    if (n > 1100)
      throw std::invalid_argument("ring_index: coordinate out of range");
  }
}

double ring_mass(const OccupationMeasure& mu, int n) {
  if (n < 0) throw std::invalid_argument("ring_mass: n must be nonnegative");
  if (mu.count() == 0)
    throw std::invalid_argument("ring_mass: empty measure");
  int hits = 0;
  for (int i = 0; i < mu.count(); ++i)
    if (ring_index(mu.points.row(i)) == n) ++hits;
  return static_cast<double>(hits) / static_cast<double>(mu.count());
}

void save_point_cloud(const OccupationMeasure& mu, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("point cloud: cannot open " + path +
                             " for writing");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", mu.t_effective);
  out << mu.dim() << "," << mu.count() << "," << buf << "\n";
  for (int i = 0; i < mu.count(); ++i) {
    for (int j = 0; j < mu.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", mu.points(i, j));
      out << (j > 0 ? "," : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("point cloud: write failed on " + path);
}

OccupationMeasure load_point_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("point cloud: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("point cloud: missing header in " + path);
  int d = 0, count = 0;
  double teff = 0.0;
  {
    std::istringstream hs(line);
    char c1 = 0, c2 = 0;
    if (!(hs >> d >> c1 >> count >> c2 >> teff) || c1 != ',' || c2 != ',')
      throw std::runtime_error("point cloud: bad header in " + path);
  }
  if (d < 1 || count < 1 || !(teff > 0.0))
    throw std::runtime_error("point cloud: bad header values in " + path);
  OccupationMeasure mu;
  mu.points = Eigen::MatrixXd(count, d);
  mu.t_effective = teff;
  for (int i = 0; i < count; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error("point cloud: truncated file " + path);
    std::istringstream ls(line);
    for (int j = 0; j < d; ++j) {
      double v = 0.0;
      char sep = 0;
      if (j > 0 && !(ls >> sep))
        throw std::runtime_error("point cloud: bad row in " + path);
      if (!(ls >> v))
        throw std::runtime_error("point cloud: bad row in " + path);
      mu.points(i, j) = v;
    }
  }
  return mu;
}

}  // namespace ergolab
