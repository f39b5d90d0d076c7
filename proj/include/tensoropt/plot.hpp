#pragma once
// Self-contained SVG log-log plots: residual-vs-iteration series with theory
// envelopes overlaid. No external renderer; plain polylines, decade ticks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "tensoropt/bench.hpp"

namespace tensoropt::bench {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (t, value), positive values only
  bool dashed = false;
};

namespace detail {

constexpr double kPlotW = 720.0, kPlotH = 520.0;
constexpr double kMarginL = 70.0, kMarginR = 30.0, kMarginT = 40.0, kMarginB = 55.0;

inline std::string tick_label(int decade) { return "1e" + std::to_string(decade); }

}  // namespace detail

// Writes one log-log chart; series with no positive points are dropped.
// Returns false when nothing was plottable.
inline bool write_loglog_svg(const std::vector<PlotSeries>& series, const std::string& title,
                             const fs::path& file) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = 0.0;
  double ymin = std::numeric_limits<double>::infinity(), ymax = 0.0;
  std::vector<const PlotSeries*> usable;
  for (const auto& s : series) {
    bool any = false;
    for (const auto& [x, y] : s.points) {
      if (x > 0.0 && y > 0.0 && std::isfinite(y)) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
        any = true;
      }
    }
    if (any) usable.push_back(&s);
  }
  if (usable.empty()) return false;

  const int xlo = static_cast<int>(std::floor(std::log10(xmin)));
  const int xhi = static_cast<int>(std::ceil(std::log10(xmax) - 1e-12));
  const int ylo = static_cast<int>(std::floor(std::log10(ymin)));
  const int yhi = static_cast<int>(std::ceil(std::log10(ymax) - 1e-12));
  const double lx0 = xlo, lx1 = std::max<double>(xhi, xlo + 1);
  const double ly0 = ylo, ly1 = std::max<double>(yhi, ylo + 1);

  using namespace detail;
  const double px0 = kMarginL, px1 = kPlotW - kMarginR;
  const double py0 = kPlotH - kMarginB, py1 = kMarginT;
  auto sx = [&](double x) { return px0 + (std::log10(x) - lx0) / (lx1 - lx0) * (px1 - px0); };
  auto sy = [&](double y) { return py0 + (std::log10(y) - ly0) / (ly1 - ly0) * (py1 - py0); };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPlotW << "\" height=\"" << kPlotH
      << "\" viewBox=\"0 0 " << kPlotW << " " << kPlotH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kPlotW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";

  // axes
  out << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px1 << "\" y2=\"" << py0
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px0 << "\" y2=\"" << py1
      << "\" stroke=\"black\"/>\n";
  const int xstep = std::max(1, (xhi - xlo) / 8 + ((xhi - xlo) % 8 ? 1 : 0));
  for (int d = xlo; d <= std::max(xhi, xlo + 1); d += xstep) {
    const double px = px0 + (d - lx0) / (lx1 - lx0) * (px1 - px0);
    out << "<line x1=\"" << px << "\" y1=\"" << py0 << "\" x2=\"" << px << "\" y2=\"" << py0 + 5
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << px << "\" y=\"" << py0 + 20 << "\" text-anchor=\"middle\" font-size=\"11\">"
        << detail::tick_label(d) << "</text>\n";
  }
  const int ystep = std::max(1, (yhi - ylo) / 8 + ((yhi - ylo) % 8 ? 1 : 0));
  for (int d = ylo; d <= std::max(yhi, ylo + 1); d += ystep) {
    const double py = py0 + (d - ly0) / (ly1 - ly0) * (py1 - py0);
    out << "<line x1=\"" << px0 - 5 << "\" y1=\"" << py << "\" x2=\"" << px0 << "\" y2=\"" << py
        << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << px0 - 8 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
        << detail::tick_label(d) << "</text>\n";
  }
  out << "<text x=\"" << (px0 + px1) / 2 << "\" y=\"" << kPlotH - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">iteration t (log10)</text>\n"
      << "<text x=\"16\" y=\"" << (py0 + py1) / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << (py0 + py1) / 2 << ")\">residual (log10)</text>\n";

  int ci = 0;
  double legend_y = kMarginT + 8;
  for (const auto* s : usable) {
    const char* color = kColors[ci % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (s->dashed) out << " stroke-dasharray=\"6 4\"";
    out << " points=\"";
    for (const auto& [x, y] : s->points) {
      if (x > 0.0 && y > 0.0 && std::isfinite(y)) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", sx(x), sy(y));
        out << buf;
      }
    }
    out << "\"/>\n";
    out << "<line x1=\"" << px1 - 150 << "\" y1=\"" << legend_y << "\" x2=\"" << px1 - 120
        << "\" y2=\"" << legend_y << "\" stroke=\"" << color << "\" stroke-width=\"1.5\""
        << (s->dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n"
        << "<text x=\"" << px1 - 114 << "\" y=\"" << legend_y + 4 << "\" font-size=\"11\">"
        << s->label << "</text>\n";
    legend_y += 16;
    ++ci;
  }
  out << "</svg>\n";
  return true;
}

// One SVG per record: the residual series plus upper/lower envelopes when a
// bounds report is supplied. Records with no positive residuals are skipped
// with a warning.
inline std::vector<fs::path> emit_plots(
    const std::vector<std::pair<std::string, RunRecord>>& named_records,
    const std::vector<const BoundsReport*>& reports, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  for (std::size_t i = 0; i < named_records.size(); ++i) {
    const auto& [name, rec] = named_records[i];
    PlotSeries data{"residual", {}, false};
    for (const auto& r : rec.rows) {
      if (r.t >= 1 && std::isfinite(r.residual) && r.residual > 0.0) {
        data.points.emplace_back(r.t, r.residual);
      }
    }
    if (data.points.empty()) {
      std::cerr << "warning: no positive residuals in '" << name << "', plot skipped\n";
      continue;
    }
    std::vector<PlotSeries> series{data};
    if (i < reports.size() && reports[i] != nullptr) {
      PlotSeries upper{"upper bound", {}, true}, lower{"lower bound", {}, true};
      for (const auto& row : reports[i]->rows) {
        if (std::isfinite(row.upper) && row.upper > 0.0) upper.points.emplace_back(row.t, row.upper);
        if (std::isfinite(row.lower) && row.lower > 0.0) lower.points.emplace_back(row.t, row.lower);
      }
      if (!upper.points.empty()) series.push_back(std::move(upper));
      if (!lower.points.empty()) series.push_back(std::move(lower));
    }
    const fs::path file = out_dir / (name + ".svg");
    if (write_loglog_svg(series, name, file)) written.push_back(file);
  }
  return written;
}

}  // namespace tensoropt::bench
