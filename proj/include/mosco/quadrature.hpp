#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mosco {

struct QuadratureSpec {
  double panels_per_unit = 8.0;
  int order = 10;
  /// Stop once two successive panel doublings change the estimate by less than this.
  double tolerance = 1e-10;
  int max_refinements = 14;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t panels = 0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

using Box = std::vector<Interval>;

class QuadratureFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GaussLegendreRule {
  std::vector<double> nodes;  // on [-1, 1]
  std::vector<double> weights;
};

/// Nodes and weights by Newton iteration on the Legendre polynomial.
inline GaussLegendreRule gauss_legendre(int order) {
  if (order < 1 || order > 64) throw std::invalid_argument("quadrature order must be in [1, 64]");
  GaussLegendreRule rule;
  if (order == 1) return {{0.0}, {2.0}};
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int j = 2; j <= order; ++j) {
        const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = z;
    for (int j = 2; j <= order; ++j) {
      const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = order * (z * p1 - p0) / (z * z - 1.0);
    rule.nodes[i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return rule;
}

namespace detail {

struct PanelGrid {
  std::vector<double> points;
  std::vector<double> weights;
};

inline PanelGrid composite_grid(const GaussLegendreRule& rule, Interval iv, std::size_t panels) {
  PanelGrid grid;
  const double width = iv.length() / static_cast<double>(panels);
  grid.points.reserve(panels * rule.nodes.size());
  grid.weights.reserve(panels * rule.nodes.size());
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = iv.lo + (static_cast<double>(p) + 0.5) * width;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      grid.points.push_back(mid + 0.5 * width * rule.nodes[q]);
      grid.weights.push_back(0.5 * width * rule.weights[q]);
    }
  }
  return grid;
}

inline double checked(double v, double x) {
  if (!std::isfinite(v)) throw std::domain_error("non-finite integrand value at x = " + std::to_string(x));
  return v;
}

}  // namespace detail

/**
 * Composite Gauss-Legendre rule on [lo, hi], panel count doubled until the
 * estimate moves by less than spec.tolerance.
 */
template <class F>
QuadratureResult integrate(F&& g, double lo, double hi, const QuadratureSpec& spec = {}) {
  if (hi < lo) throw std::invalid_argument("integration interval reversed");
  if (hi == lo) return {};
  const auto rule = gauss_legendre(spec.order);
  auto panels = static_cast<std::size_t>(std::max(1.0, std::ceil(spec.panels_per_unit * (hi - lo))));
  auto sum = [&](std::size_t count) {
    const auto grid = detail::composite_grid(rule, {lo, hi}, count);
    double s = 0.0;
    for (std::size_t i = 0; i < grid.points.size(); ++i)
      s += grid.weights[i] * detail::checked(g(grid.points[i]), grid.points[i]);
    return s;
  };
  double previous = sum(panels);
  for (int r = 0; r < spec.max_refinements; ++r) {
    panels *= 2;
    const double current = sum(panels);
    const double change = std::abs(current - previous);
    if (change < spec.tolerance) return {current, change, panels};
    previous = current;
  }
  throw QuadratureFailure("quadrature did not reach tolerance on [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
}

/// Tensor-product composite rule over a box; g receives a span of m coordinates.
template <class G>
QuadratureResult integrate(G&& g, const Box& box, const QuadratureSpec& spec = {}) {
  const std::size_t m = box.size();
  if (m == 0) throw std::invalid_argument("empty integration box");
  for (const auto& iv : box) {
    if (iv.hi < iv.lo) throw std::invalid_argument("integration interval reversed");
    if (iv.hi == iv.lo) return {};
  }
  const auto rule = gauss_legendre(spec.order);
  std::vector<std::size_t> panels(m);
  for (std::size_t d = 0; d < m; ++d)
    panels[d] = static_cast<std::size_t>(std::max(1.0, std::ceil(spec.panels_per_unit * box[d].length())));

  auto sum = [&]() {
    std::vector<detail::PanelGrid> grids;
    double total_points = 1.0;
    for (std::size_t d = 0; d < m; ++d) {
      grids.push_back(detail::composite_grid(rule, box[d], panels[d]));
      total_points *= static_cast<double>(grids.back().points.size());
    }
    if (total_points > 4e8) throw QuadratureFailure("tensor quadrature exceeds the evaluation budget");
    std::vector<std::size_t> counter(m, 0);
    std::vector<double> z(m);
    double s = 0.0;
    while (true) {
      double w = 1.0;
      for (std::size_t d = 0; d < m; ++d) {
        z[d] = grids[d].points[counter[d]];
        w *= grids[d].weights[counter[d]];
      }
      s += w * detail::checked(g(std::span<const double>(z)), z[0]);
      std::size_t d = m;
      while (d-- > 0) {
        if (++counter[d] < grids[d].points.size()) break;
        counter[d] = 0;
      }
      if (d == static_cast<std::size_t>(-1)) break;
    }
    return s;
  };

  double previous = sum();
  for (int r = 0; r < spec.max_refinements; ++r) {
    for (auto& p : panels) p *= 2;
    const double current = sum();
    const double change = std::abs(current - previous);
    if (change < spec.tolerance) {
      std::size_t total = 1;
      for (auto p : panels) total *= p;
      return {current, change, total};
    }
    previous = current;
  }
  throw QuadratureFailure("tensor quadrature did not reach tolerance");
}

}  // namespace mosco
