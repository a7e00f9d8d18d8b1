#include "ergolab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergolab {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double parse_field(const std::string& field, const std::string& path) {
  const char* s = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0')
    throw std::invalid_argument("report: bad number '" + field + "' in " +
                                path);
  return v;
}

// Affine map from data coordinates to pixels, y axis flipped.
struct PlotScale {
  double x0, x1, y0, y1;  // data range (log10)
  double px0, px1, py0, py1;

  double x(double v) const {
    return px0 + (v - x0) / (x1 - x0) * (px1 - px0);
  }
  double y(double v) const {
    return py1 - (v - y0) / (y1 - y0) * (py1 - py0);
  }
};

void svg_line(std::ostream& out, const PlotScale& s, double xa, double ya,
              double xb, double yb, const char* attrs) {
  out << "  <line x1=\"" << fmt3(s.x(xa)) << "\" y1=\"" << fmt3(s.y(ya))
      << "\" x2=\"" << fmt3(s.x(xb)) << "\" y2=\"" << fmt3(s.y(yb)) << "\" "
      << attrs << "/>\n";
}

}  // namespace

std::string report_csv_path(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/report_" + config_hash(cfg) + ".csv";
}

std::string plot_svg_path(const ExperimentConfig& cfg) {
  return cfg.out_dir + "/plot_" + config_hash(cfg) + ".svg";
}

void write_report_csv(const ExperimentResult& result,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("report: cannot write '" + path + "'");
  out << "t,mean,se,n\n";
  for (const ExperimentRow& row : result.rows)
    out << fmt(row.t) << ',' << fmt(row.mean) << ',' << fmt(row.se) << ','
        << row.n << '\n';
  if (!out) throw std::runtime_error("report: write failed on '" + path + "'");
}

std::vector<ExperimentRow> read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("report: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "t,mean,se,n")
    throw std::invalid_argument("report: '" + path +
                                "' does not start with the t,mean,se,n header");
  std::vector<ExperimentRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    ExperimentRow row;
    if (!std::getline(ls, field, ',')) break;
    row.t = parse_field(field, path);
    if (!std::getline(ls, field, ','))
      throw std::invalid_argument("report: short row in " + path);
    row.mean = parse_field(field, path);
    if (!std::getline(ls, field, ','))
      throw std::invalid_argument("report: short row in " + path);
    row.se = parse_field(field, path);
    if (!std::getline(ls, field, ','))
      throw std::invalid_argument("report: short row in " + path);
    row.n = static_cast<int>(parse_field(field, path));
    rows.push_back(row);
  }
  return rows;
}

void write_plot_svg(const ExperimentResult& result, const std::string& path) {
  std::vector<const ExperimentRow*> rows;
  for (const ExperimentRow& row : result.rows)
    if (row.mean > 0.0 && row.t > 0.0) rows.push_back(&row);
  if (rows.size() < 2)
    throw std::invalid_argument(
        "report: a log-log plot needs at least two rows with positive mean");

  double x_lo = std::log10(rows.front()->t), x_hi = x_lo;
  double y_lo = std::log10(rows.front()->mean), y_hi = y_lo;
  for (const ExperimentRow* row : rows) {
    const double x = std::log10(row->t);
    const double y = std::log10(row->mean);
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }
  const double x_pad = 0.06 * (x_hi - x_lo);
  const double y_pad = std::max(0.08 * (y_hi - y_lo), 0.05);

  PlotScale s{x_lo - x_pad, x_hi + x_pad, y_lo - y_pad, y_hi + y_pad,
              70.0, 680.0, 40.0, 470.0};

  const bool have_fit = std::isfinite(result.fit.slope);
  const double ln10 = std::log(10.0);

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" "
         "height=\"520\" viewBox=\"0 0 720 520\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"720\" height=\"520\" "
         "fill=\"white\"/>\n";

  // frame
  out << "  <rect x=\"70\" y=\"40\" width=\"610\" height=\"430\" "
         "fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";

  // x ticks at the data abscissae, y ticks on a uniform log10 grid
  for (const ExperimentRow* row : rows) {
    const double x = std::log10(row->t);
    out << "  <line x1=\"" << fmt3(s.x(x)) << "\" y1=\"470\" x2=\""
        << fmt3(s.x(x)) << "\" y2=\"476\" stroke=\"#444\"/>\n";
    out << "  <text x=\"" << fmt3(s.x(x))
        << "\" y=\"492\" font-size=\"12\" text-anchor=\"middle\">"
        << fmt3(row->t) << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double y = s.y0 + k * (s.y1 - s.y0) / 4.0;
    out << "  <line x1=\"64\" y1=\"" << fmt3(s.y(y)) << "\" x2=\"70\" y2=\""
        << fmt3(s.y(y)) << "\" stroke=\"#444\"/>\n";
    out << "  <text x=\"60\" y=\"" << fmt3(s.y(y) + 4)
        << "\" font-size=\"12\" text-anchor=\"end\">"
        << fmt3(std::pow(10.0, y)) << "</text>\n";
  }
  out << "  <text x=\"375\" y=\"512\" font-size=\"13\" "
         "text-anchor=\"middle\">t</text>\n";
  out << "  <text x=\"20\" y=\"255\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 20 255)\">mean distance</text>\n";

  // error bars, then the points on top
  for (const ExperimentRow* row : rows) {
    const double x = std::log10(row->t);
    const double hi = row->mean + row->se;
    const double lo = std::max(row->mean - row->se, row->mean * 1e-3);
    svg_line(out, s, x, std::log10(lo), x, std::log10(hi),
             "stroke=\"#7a9cc6\" stroke-width=\"1.5\"");
  }
  for (const ExperimentRow* row : rows) {
    out << "  <circle cx=\"" << fmt3(s.x(std::log10(row->t))) << "\" cy=\""
        << fmt3(s.y(std::log10(row->mean)))
        << "\" r=\"4\" fill=\"#2c5f9e\"/>\n";
  }

  // fitted line over the data span (fit is in natural logs)
  if (have_fit) {
    const double xa = x_lo, xb = x_hi;
    const double ya =
        (result.fit.intercept + result.fit.slope * xa * ln10) / ln10;
    const double yb =
        (result.fit.intercept + result.fit.slope * xb * ln10) / ln10;
    out << "  <line class=\"fit\" x1=\"" << fmt3(s.x(xa)) << "\" y1=\""
        << fmt3(s.y(ya)) << "\" x2=\"" << fmt3(s.x(xb)) << "\" y2=\""
        << fmt3(s.y(yb))
        << "\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
    out << "  <text x=\"556\" y=\"60\" font-size=\"13\" fill=\"#c0392b\">fit "
           "slope "
        << fmt3(result.fit.slope) << "</text>\n";
  }

  // theory guide anchored at the first plotted point
  if (result.verdict.applicable) {
    const double slope = result.verdict.theory_slope;
    const double anchor_x = std::log10(rows.front()->t);
    const double anchor_y = std::log10(rows.front()->mean);
    const double ya = anchor_y + slope * (x_lo - anchor_x);
    const double yb = anchor_y + slope * (x_hi - anchor_x);
    out << "  <line class=\"guide\" x1=\"" << fmt3(s.x(x_lo)) << "\" y1=\""
        << fmt3(s.y(ya)) << "\" x2=\"" << fmt3(s.x(x_hi)) << "\" y2=\""
        << fmt3(s.y(yb))
        << "\" stroke=\"#666\" stroke-width=\"1.5\" "
           "stroke-dasharray=\"6 4\"/>\n";
    out << "  <text x=\"556\" y=\"78\" font-size=\"13\" fill=\"#666\">guide "
           "slope "
        << fmt3(slope) << "</text>\n";
  }

  out << "</svg>\n";

  std::ofstream file(path);
  if (!file) throw std::invalid_argument("report: cannot write '" + path + "'");
  file << out.str();
  if (!file) throw std::runtime_error("report: write failed on '" + path + "'");
}

ReportPaths emit_report(const ExperimentResult& result,
                        const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  ReportPaths paths;
  paths.csv = report_csv_path(cfg);
  write_report_csv(result, paths.csv);
  int plottable = 0;
  for (const ExperimentRow& row : result.rows)
    if (row.mean > 0.0) ++plottable;
  if (plottable >= 2) {
    paths.svg = plot_svg_path(cfg);
    write_plot_svg(result, paths.svg);
  }
  return paths;
}

}  // namespace ergolab
