#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mosco/convergence.hpp"

namespace mosco {

/// Shortest decimal text that round-trips the double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  if (v == std::floor(v) && std::abs(v) <= 9007199254740992.0) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
    return buf;
  }
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_csv(std::ostream& os, const ConvergenceTable& table) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "," : "") << table.columns[c];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
    os << '\n';
  }
}

/**
 * Log-log line chart of `series` columns against the table's first column.
 * Nonpositive values are left out of the polyline. Output depends only on
 * the table contents.
 */
inline void write_loglog_svg(std::ostream& os, const ConvergenceTable& table, const std::vector<std::string>& series,
                             const std::string& title) {
  constexpr double W = 640, H = 420, L = 80, R = 150, T = 40, B = 60;
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  const auto xs = table.column(table.columns.front());
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    const auto ys = table.column(s);
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (xs[i] > 0 && ys[i] > 0) {
        xmin = std::min(xmin, std::log10(xs[i]));
        xmax = std::max(xmax, std::log10(xs[i]));
        ymin = std::min(ymin, std::log10(ys[i]));
        ymax = std::max(ymax, std::log10(ys[i]));
      }
  }
  if (!(xmin <= xmax)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  xmin = std::floor(xmin * 10) / 10, xmax = std::ceil(xmax * 10) / 10;
  ymin = std::floor(ymin), ymax = std::ceil(ymax);
  if (xmax - xmin < 1e-9) xmin -= 0.5, xmax += 0.5;
  if (ymax - ymin < 1e-9) ymin -= 1, ymax += 1;
  auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };
  char buf[256];
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                L, T, W - L - R, H - T - B);
  os << buf;
  for (int e = static_cast<int>(ymin); e <= static_cast<int>(ymax); ++e) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"#ddd\"/>"
                  "<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\">1e%d</text>\n",
                  L, py(e), W - R, py(e), L - 6, py(e) + 4, e);
    os << buf;
  }
  for (double x : xs)
    if (x > 0) {
      const double lx = std::log10(x);
      if (lx < xmin - 1e-12 || lx > xmax + 1e-12) continue;
      std::snprintf(buf, sizeof buf,
                    "<line x1=\"%.2f\" y1=\"%g\" x2=\"%.2f\" y2=\"%g\" stroke=\"#ddd\"/>"
                    "<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">%s</text>\n",
                    px(lx), T, px(lx), H - B, px(lx), H - B + 18, format_number(x).c_str());
      os << buf;
    }
  os << "<text x=\"" << L + (W - L - R) / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">"
     << table.columns.front() << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % std::size(palette)];
    const auto ys = table.column(series[s]);
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (xs[i] > 0 && ys[i] > 0) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(std::log10(xs[i])), py(std::log10(ys[i])));
        os << buf;
      }
    os << "\"/>\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (xs[i] > 0 && ys[i] > 0) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n",
                      px(std::log10(xs[i])), py(std::log10(ys[i])), color);
        os << buf;
      }
    const double ly = T + 16 + 18.0 * static_cast<double>(s);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"2\"/>"
                  "<text x=\"%g\" y=\"%g\">%s</text>\n",
                  W - R + 10, ly, W - R + 30, ly, color, W - R + 36, ly + 4, series[s].c_str());
    os << buf;
  }
  os << "</svg>\n";
}

/// Columns worth plotting: errors, gaps and relative errors.
inline std::vector<std::string> plot_series(const ConvergenceTable& table) {
  std::vector<std::string> out;
  for (const auto& c : table.columns)
    if (c.find("err") != std::string::npos || c == "gap") out.push_back(c);
  return out;
}

inline nlohmann::ordered_json table_json(const ConvergenceTable& table) {
  nlohmann::ordered_json j;
  j["name"] = table.name;
  j["columns"] = table.columns;
  j["rows"] = table.rows;
  nlohmann::ordered_json orders = nlohmann::ordered_json::object();
  for (const auto& [k, v] : table.fitted_orders) orders[k] = v;
  j["fitted_orders"] = orders;
  return j;
}

}  // namespace mosco
