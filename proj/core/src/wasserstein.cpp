#include "ergolab/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "normal_detail.hpp"

namespace ergolab {

namespace {

constexpr int kMaxCellBits = 40;

void check_geometry_args(int dim, int max_ring, int depth) {
  if (dim < 1) throw std::invalid_argument("histogram: dimension must be >= 1");
  if (max_ring < 0 || max_ring >= (1 << 15))
    throw std::invalid_argument("histogram: max_ring out of range");
  if (depth < 0)
    throw std::invalid_argument("histogram: depth must be >= 0");
  if (depth * dim > 20)
    throw std::invalid_argument(
        "histogram: depth * dim must be <= 20 (memory guard)");
}

void morton_decode(std::uint64_t code, int bits, int dim, Eigen::ArrayXi& out) {
  out.setZero();
  for (int b = 0; b < bits; ++b)
    for (int j = 0; j < dim; ++j)
      out(j) |= static_cast<int>((code >> (b * dim + j)) & 1u) << b;
}

// Per-coordinate cell index of x within ring n at level l: the tiling of
// (-2^n, 2^n] into 2^l half-open intervals of width 2^(n+1-l).
int cell_coordinate(double x, int ring, int level) {
  const double shifted = x + std::ldexp(1.0, ring);
  const double width = std::ldexp(1.0, ring + 1 - level);
  const long long raw = static_cast<long long>(std::ceil(shifted / width)) - 1;
  const long long hi = (1ll << level) - 1;
  return static_cast<int>(std::clamp(raw, 0ll, hi));
}

double geometric_tail_factor(double p) { return 1.0 / (1.0 - std::exp2(-p)); }

double level_residual_bound(const DyadicHistogram& h1,
                            const DyadicHistogram& h2, double p) {
  double weighted = 0.0;
  for (int n = 0; n <= h1.max_ring; ++n)
    weighted += std::exp2(p * n) * (h1.ring_mass(n) + h2.ring_mass(n));
  return weighted * std::exp2(-p * (h1.depth + 1)) * geometric_tail_factor(p);
}

double fg_truncated_sum(const DyadicHistogram& h1, const DyadicHistogram& h2,
                        double p) {
  if (!h1.same_geometry(h2))
    throw std::invalid_argument("fg_multiscale_sum: histogram geometry mismatch");
  if (!(p > 0.0))
    throw std::invalid_argument("fg_multiscale_sum: p must be > 0");
  std::vector<std::uint64_t> keys;
  keys.reserve(h1.counts.size() + h2.counts.size());
  for (const auto& kv : h1.counts) keys.push_back(kv.first);
  for (const auto& kv : h2.counts) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  double sum = 0.0;
  for (const std::uint64_t k : keys) {
    const int ring = static_cast<int>(k >> 48);
    const int level = static_cast<int>((k >> 40) & 0xff);
    const double diff = std::abs(h1.cell_mass(ring, level, k & 0xffffffffffull) -
                                 h2.cell_mass(ring, level, k & 0xffffffffffull));
    if (diff != 0.0) sum += std::exp2(p * (ring - level)) * diff;
  }
  return sum;
}

struct SortedAtoms {
  std::vector<double> pos;
  std::vector<double> w;
};

SortedAtoms sorted_atoms(const Eigen::VectorXd& x, const Eigen::VectorXd& wx,
                         const char* side) {
  if (x.size() == 0)
    throw std::invalid_argument(std::string("wasserstein_1d_exact: empty ") +
                                side + " measure");
  if (wx.size() != x.size())
    throw std::invalid_argument(
        "wasserstein_1d_exact: positions and weights differ in length");
  if (!x.allFinite())
    throw std::invalid_argument(
        "wasserstein_1d_exact: non-finite position");
  double total = 0.0;
  for (Eigen::Index i = 0; i < wx.size(); ++i) {
    if (!(wx(i) >= 0.0))
      throw std::invalid_argument("wasserstein_1d_exact: negative weight");
    total += wx(i);
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument(
        "wasserstein_1d_exact: weights must sum to 1");
  std::vector<int> order(static_cast<std::size_t>(x.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return x(a) < x(b); });
  SortedAtoms out;
  out.pos.reserve(order.size());
  out.w.reserve(order.size());
  for (const int i : order) {
    out.pos.push_back(x(i));
    out.w.push_back(wx(i));
  }
  return out;
}

// Exact optimal assignment via shortest augmenting paths with potentials
// (the classical O(n^3) Hungarian scheme).
double assignment_cost(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost(match[j] - 1, j - 1);
  return total;
}

}  // namespace

std::uint64_t DyadicHistogram::key(int ring, int level, std::uint64_t cell) {
  return (static_cast<std::uint64_t>(ring) << 48) |
         (static_cast<std::uint64_t>(level) << kMaxCellBits) | cell;
}

double DyadicHistogram::cell_mass(int ring, int level,
                                  std::uint64_t cell) const {
  const auto it = counts.find(key(ring, level, cell));
  return it == counts.end() ? 0.0 : it->second;
}

double DyadicHistogram::ring_mass(int ring) const {
  return cell_mass(ring, 0, 0);
}

bool DyadicHistogram::same_geometry(const DyadicHistogram& other) const {
  return dim == other.dim && max_ring == other.max_ring &&
         depth == other.depth;
}

std::uint64_t morton_encode(const Eigen::Ref<const Eigen::ArrayXi>& idx,
                            int bits) {
  const int d = static_cast<int>(idx.size());
  if (bits * d > kMaxCellBits)
    throw std::invalid_argument("morton_encode: too many bits");
  std::uint64_t code = 0;
  for (int b = 0; b < bits; ++b)
    for (int j = 0; j < d; ++j)
      code |= static_cast<std::uint64_t>((idx(j) >> b) & 1)
              << (b * d + j);
  return code;
}

DyadicHistogram histogramize(const Eigen::MatrixXd& points, int max_ring,
                             int depth) {
  const int d = static_cast<int>(points.cols());
  check_geometry_args(d, max_ring, depth);
  if (points.rows() < 1)
    throw std::invalid_argument("histogramize: empty point set");
  DyadicHistogram h;
  h.dim = d;
  h.max_ring = max_ring;
  h.depth = depth;
  const double w = 1.0 / static_cast<double>(points.rows());
  Eigen::ArrayXi idx(d);
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    const int ring = ring_index(points.row(r));
    if (ring > max_ring) {
      h.overflow_mass += w;
      continue;
    }
    for (int l = 0; l <= depth; ++l) {
      for (int j = 0; j < d; ++j)
        idx(j) = cell_coordinate(points(r, j), ring, l);
      h.counts[DyadicHistogram::key(ring, l, morton_encode(idx, l))] += w;
    }
  }
  return h;
}

DyadicHistogram histogramize(const OccupationMeasure& mu, int max_ring,
                             int depth) {
  return histogramize(mu.points, max_ring, depth);
}

DyadicHistogram histogramize_gaussian_diag(const Eigen::VectorXd& mean,
                                           const Eigen::VectorXd& variance,
                                           int max_ring, int depth) {
  const int d = static_cast<int>(mean.size());
  check_geometry_args(d, max_ring, depth);
  if (variance.size() != d)
    throw std::invalid_argument(
        "histogramize_gaussian_diag: mean / variance size mismatch");
  for (int j = 0; j < d; ++j)
    if (!(variance(j) > 0.0))
      throw std::invalid_argument(
          "histogramize_gaussian_diag: variances must be > 0");

  DyadicHistogram h;
  h.dim = d;
  h.max_ring = max_ring;
  h.depth = depth;

  const int cells1d = 1 << depth;
  const std::size_t fine = std::size_t{1} << (d * depth);
  std::vector<double> level_buf(fine), parent_buf(fine >> d);
  std::vector<std::vector<double>> full(d), inner(d);
  Eigen::ArrayXi idx(d);

  const auto cdf = [&](int j, double x) {
    return detail::normal_cdf((x - mean(j)) / std::sqrt(variance(j)));
  };

  for (int n = 0; n <= max_ring; ++n) {
    const double half = std::ldexp(1.0, n);
    const double width = std::ldexp(1.0, n + 1 - depth);
    const double inner_half = std::ldexp(1.0, n - 1);
    for (int j = 0; j < d; ++j) {
      full[j].assign(cells1d, 0.0);
      inner[j].assign(cells1d, 0.0);
      for (int i = 0; i < cells1d; ++i) {
        const double a = -half + i * width;
        const double b = a + width;
        full[j][i] = cdf(j, b) - cdf(j, a);
        if (n >= 1) {
          const double ia = std::max(a, -inner_half);
          const double ib = std::min(b, inner_half);
          inner[j][i] = ib > ia ? cdf(j, ib) - cdf(j, ia) : 0.0;
        }
      }
    }
    for (std::size_t m = 0; m < fine; ++m) {
      morton_decode(m, depth, d, idx);
      double full_prod = 1.0;
      double inner_prod = n >= 1 ? 1.0 : 0.0;
      for (int j = 0; j < d; ++j) {
        full_prod *= full[j][idx(j)];
        inner_prod *= inner[j][idx(j)];
      }
      level_buf[m] = std::max(0.0, full_prod - inner_prod);
    }
    for (std::size_t m = 0; m < fine; ++m)
      if (level_buf[m] != 0.0)
        h.counts[DyadicHistogram::key(n, depth, m)] = level_buf[m];
    for (int l = depth - 1; l >= 0; --l) {
      const std::size_t size = std::size_t{1} << (d * l);
      for (std::size_t parent = 0; parent < size; ++parent) {
        double s = 0.0;
        for (int c = 0; c < (1 << d); ++c)
          s += level_buf[(parent << d) | static_cast<unsigned>(c)];
        parent_buf[parent] = s;
        if (s != 0.0) h.counts[DyadicHistogram::key(n, l, parent)] = s;
      }
      std::copy(parent_buf.begin(), parent_buf.begin() + size,
                level_buf.begin());
    }
  }

  double inside = 1.0;
  const double outer = std::ldexp(1.0, max_ring);
  for (int j = 0; j < d; ++j) inside *= cdf(j, outer) - cdf(j, -outer);
  h.overflow_mass = std::max(0.0, 1.0 - inside);
  return h;
}

FgSum fg_multiscale_sum(const DyadicHistogram& h1, const DyadicHistogram& h2,
                        double p) {
  FgSum out;
  out.value = fg_truncated_sum(h1, h2, p);
  out.level_residual = level_residual_bound(h1, h2, p);
  out.ring_residual = (h1.overflow_mass == 0.0 && h2.overflow_mass == 0.0)
                          ? 0.0
                          : std::numeric_limits<double>::infinity();
  return out;
}

FgSum fg_multiscale_sum(const DyadicHistogram& h1, const DyadicHistogram& h2,
                        double p, double q, double moment_q_1,
                        double moment_q_2) {
  FgSum out;
  out.value = fg_truncated_sum(h1, h2, p);
  out.level_residual = level_residual_bound(h1, h2, p);
  if (!(q > p))
    throw std::invalid_argument(
        "fg_multiscale_sum: tail order q must exceed p");
  if (!(moment_q_1 >= 0.0) || !(moment_q_2 >= 0.0))
    throw std::invalid_argument("fg_multiscale_sum: moments must be >= 0");
  out.ring_residual = (moment_q_1 + moment_q_2) * std::exp2(q) *
                      std::exp2((p - q) * (h1.max_ring + 1)) /
                      (1.0 - std::exp2(p - q)) * geometric_tail_factor(p);
  return out;
}

double wasserstein_1d_exact(const Eigen::VectorXd& x,
                            const Eigen::VectorXd& weight_x,
                            const Eigen::VectorXd& y,
                            const Eigen::VectorXd& weight_y, double p) {
  if (!(p >= 1.0))
    throw std::invalid_argument("wasserstein_1d_exact: p must be >= 1");
  const SortedAtoms a = sorted_atoms(x, weight_x, "first");
  const SortedAtoms b = sorted_atoms(y, weight_y, "second");
  const std::size_t n = a.pos.size(), m = b.pos.size();
  std::size_t i = 0, j = 0;
  double u = 0.0, ca = a.w[0], cb = b.w[0], acc = 0.0;
  while (i < n && j < m) {
    const double next = std::min(ca, cb);
    if (next > u) acc += (next - u) * std::pow(std::abs(a.pos[i] - b.pos[j]), p);
    u = next;
    if (ca <= next + 1e-15) {
      ++i;
      if (i < n) ca += a.w[i];
    }
    if (cb <= next + 1e-15) {
      ++j;
      if (j < m) cb += b.w[j];
    }
  }
  return std::pow(acc, 1.0 / p);
}

double wasserstein_1d_exact(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                            double p) {
  if (!(p >= 1.0))
    throw std::invalid_argument("wasserstein_1d_exact: p must be >= 1");
  if (x.size() == 0 || y.size() == 0)
    throw std::invalid_argument("wasserstein_1d_exact: empty measure");
  if (x.size() == y.size()) {
    // equal atom counts: the quantile coupling pairs order statistics
    std::vector<double> xs(x.data(), x.data() + x.size());
    std::vector<double> ys(y.data(), y.data() + y.size());
    if (!x.allFinite() || !y.allFinite())
      throw std::invalid_argument("wasserstein_1d_exact: non-finite position");
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      acc += std::pow(std::abs(xs[i] - ys[i]), p);
    return std::pow(acc / static_cast<double>(xs.size()), 1.0 / p);
  }
  const Eigen::VectorXd wx =
      Eigen::VectorXd::Constant(x.size(), 1.0 / static_cast<double>(x.size()));
  const Eigen::VectorXd wy =
      Eigen::VectorXd::Constant(y.size(), 1.0 / static_cast<double>(y.size()));
  return wasserstein_1d_exact(x, wx, y, wy, p);
}

double wasserstein_1d_exact(const OccupationMeasure& mu,
                            const OccupationMeasure& nu, double p) {
  if (mu.dim() != 1 || nu.dim() != 1)
    throw std::invalid_argument(
        "wasserstein_1d_exact: measures must be 1-dimensional");
  return wasserstein_1d_exact(mu.points.col(0), nu.points.col(0), p);
}

double wasserstein_1d_gaussian(const Eigen::VectorXd& x, double mean,
                               double sd) {
  if (!(sd > 0.0))
    throw std::invalid_argument("wasserstein_1d_gaussian: sd must be > 0");
  if (x.size() == 0)
    throw std::invalid_argument("wasserstein_1d_gaussian: empty point set");
  if (!x.allFinite())
    throw std::invalid_argument("wasserstein_1d_gaussian: non-finite point");
  std::vector<double> z(x.data(), x.data() + x.size());
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  for (double& v : z) v = (v - mean) / sd;

  const auto A = detail::normal_cdf_integral;
  double acc = A(z.front());  // left tail: integral of Phi below z_1
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const double za = z[i], zb = z[i + 1];
    if (zb <= za) continue;
    const double c = static_cast<double>(i + 1) / n;
    const double fa = detail::normal_cdf(za);
    const double fb = detail::normal_cdf(zb);
    if (fa >= c) {
      acc += (A(zb) - A(za)) - c * (zb - za);
    } else if (fb <= c) {
      acc += c * (zb - za) - (A(zb) - A(za));
    } else {
      const double zs = std::clamp(detail::normal_quantile(c), za, zb);
      acc += c * (zs - za) - (A(zs) - A(za));
      acc += (A(zb) - A(zs)) - c * (zb - zs);
    }
  }
  acc += A(z.back()) - z.back();  // right tail: integral of 1 - Phi above z_n
  return sd * acc;
}

double wasserstein_exact_small(const Eigen::MatrixXd& x,
                               const Eigen::MatrixXd& y, double p) {
  if (!(p >= 1.0))
    throw std::invalid_argument("wasserstein_exact_small: p must be >= 1");
  if (x.rows() != y.rows())
    throw std::invalid_argument(
        "wasserstein_exact_small: support sizes must match");
  if (x.rows() < 1 || x.rows() > 64)
    throw std::invalid_argument(
        "wasserstein_exact_small: supports must have 1 to 64 points");
  if (x.cols() != y.cols())
    throw std::invalid_argument("wasserstein_exact_small: dimension mismatch");
  if (!x.allFinite() || !y.allFinite())
    throw std::invalid_argument("wasserstein_exact_small: non-finite point");
  const int n = static_cast<int>(x.rows());
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost(i, j) = std::pow((x.row(i) - y.row(j)).norm(), p);
  return std::pow(assignment_cost(cost) / n, 1.0 / p);
}

LtValue lt_function(double u, double t, double p, double beta, int d) {
  if (!(u > 0.0 && u <= 1.0))
    throw std::invalid_argument("lt_function: u must lie in (0,1]");
  if (!(t >= 1.0)) throw std::invalid_argument("lt_function: t must be >= 1");
  if (!(p > 0.0)) throw std::invalid_argument("lt_function: p must be > 0");
  if (!(beta > 0.0 && beta <= 0.5))
    throw std::invalid_argument("lt_function: beta must lie in (0,1/2]");
  if (d < 1) throw std::invalid_argument("lt_function: d must be >= 1");

  const double growth = d * (1.0 - beta);
  const double flat = std::pow(u, 1.0 / (2.0 * beta));
  const double start = std::sqrt(u / t);
  const double arg = u * std::pow(t, beta / (1.0 - beta));

  // tipping level: first l with flat <= start * 2^(growth * l)
  long long tip = 0;
  if (arg > 1.0)
    tip = static_cast<long long>(
        std::ceil(std::log(arg) / (2.0 * d * beta * std::log(2.0))));

  LtValue out;
  for (long long l = 0; l < tip; ++l)
    out.series += std::exp2(-p * static_cast<double>(l)) *
                  std::min(flat, start * std::exp2(growth * static_cast<double>(l)));
  out.series +=
      flat * std::exp2(-p * static_cast<double>(tip)) * geometric_tail_factor(p);

  const double tol = 1e-12 * std::max(1.0, growth);
  if (p > growth + tol) {
    out.bound = std::min(flat, start);
  } else if (p < growth - tol) {
    out.bound = flat * std::min(1.0, std::pow(arg, -p / (2.0 * beta * d)));
  } else {
    out.bound = start * (1.0 + std::max(0.0, std::log(arg)));
  }
  return out;
}

void save_histogram(const DyadicHistogram& h, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("save_histogram: cannot open " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", h.overflow_mass);
  out << h.dim << ',' << h.max_ring << ',' << h.depth << ',' << buf << '\n';
  std::vector<std::uint64_t> keys;
  keys.reserve(h.counts.size());
  for (const auto& kv : h.counts) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  for (const std::uint64_t k : keys) {
    std::snprintf(buf, sizeof(buf), "%.17g", h.counts.at(k));
    out << (k >> 48) << ',' << ((k >> 40) & 0xff) << ','
        << (k & 0xffffffffffull) << ',' << buf << '\n';
  }
  if (!out) throw std::runtime_error("save_histogram: write failed " + path);
}

DyadicHistogram load_histogram(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_histogram: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("load_histogram: missing header in " + path);
  DyadicHistogram h;
  {
    std::istringstream ls(line);
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ls >> h.dim >> c1 >> h.max_ring >> c2 >> h.depth >> c3 >>
          h.overflow_mass) ||
        c1 != ',' || c2 != ',' || c3 != ',')
      throw std::runtime_error("load_histogram: malformed header in " + path);
  }
  check_geometry_args(h.dim, h.max_ring, h.depth);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::uint64_t ring = 0, level = 0, cell = 0;
    double mass = 0.0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ls >> ring >> c1 >> level >> c2 >> cell >> c3 >> mass) ||
        c1 != ',' || c2 != ',' || c3 != ',')
      throw std::runtime_error("load_histogram: malformed row in " + path);
    if (ring > static_cast<std::uint64_t>(h.max_ring) ||
        level > static_cast<std::uint64_t>(h.depth))
      throw std::runtime_error("load_histogram: row outside geometry in " +
                               path);
    h.counts[DyadicHistogram::key(static_cast<int>(ring),
                                  static_cast<int>(level), cell)] = mass;
  }
  return h;
}

}  // namespace ergolab
