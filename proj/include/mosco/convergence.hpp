#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mosco {

/**
 * Least-squares slope of log(error) against log(n), negated, after dropping
 * the `discard` smallest n. Zero errors carry no rate information and are
 * skipped. nullopt when fewer than two usable points remain.
 */
inline std::optional<double> fit_order(const std::vector<double>& ns, const std::vector<double>& errors,
                                       std::size_t discard = 1) {
  if (ns.size() != errors.size()) throw std::invalid_argument("grid and error lists differ in length");
  std::vector<double> lx, ly;
  for (std::size_t i = discard; i < ns.size(); ++i) {
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i])) continue;
    lx.push_back(std::log(ns[i]));
    ly.push_back(std::log(errors[i]));
  }
  if (lx.size() < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= lx.size();
  my /= ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return -sxy / sxx;
}

inline bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

/// Named columns of doubles, one row per grid entry, plus fitted orders.
struct ConvergenceTable {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::map<std::string, double> fitted_orders;

  std::size_t column_index(const std::string& c) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == c) return i;
    throw std::out_of_range("no column named " + c);
  }

  std::vector<double> column(const std::string& c) const {
    const auto i = column_index(c);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[i]);
    return out;
  }

  /// Fits the order of `error_column` against the first column and records it.
  std::optional<double> fit(const std::string& error_column, std::size_t discard = 1) {
    auto order = fit_order(column(columns.front()), column(error_column), discard);
    if (order) fitted_orders[error_column] = *order;
    return order;
  }
};

}  // namespace mosco
