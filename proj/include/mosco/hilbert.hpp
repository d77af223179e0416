#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mosco/convergence.hpp"
#include "mosco/duality.hpp"
#include "mosco/lattice.hpp"
#include "mosco/smoothfn.hpp"

namespace mosco {

/// Which measure the discrete L2 structure carries: n^{-k} counting, or nu n^{-k}.
enum class Weight { uniform, nu_weighted };

/**
 * @brief A function on the k-particle window states, with its measure.
 *
 * values[state_index(x)] = f(x). Inner products are only defined between
 * vectors sharing window, k, weight and (for nu weights) alpha.
 */
class DiscreteVector {
 public:
  DiscreteVector(LatticeWindow w, int k, Weight weight = Weight::uniform, double alpha = 1.0)
      : window_(w), k_(k), weight_(weight), alpha_(alpha), values_(w.state_count(k), 0.0) {
    if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  }

  DiscreteVector(LatticeWindow w, int k, std::vector<double> values, Weight weight = Weight::uniform,
                 double alpha = 1.0)
      : window_(w), k_(k), weight_(weight), alpha_(alpha), values_(std::move(values)) {
    if (values_.size() != w.state_count(k)) throw std::invalid_argument("value count does not match the window");
    if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  }

  const LatticeWindow& window() const { return window_; }
  int k() const { return k_; }
  Weight weight() const { return weight_; }
  double alpha() const { return alpha_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(const CoordState& x) const { return values_[state_index(window_, x)]; }

  DiscreteVector reweighted(Weight weight, double alpha = 1.0) const {
    return DiscreteVector(window_, k_, values_, weight, alpha);
  }

  bool same_space(const DiscreteVector& o) const {
    return window_ == o.window_ && k_ == o.k_ && weight_ == o.weight_ &&
           (weight_ == Weight::uniform || alpha_ == o.alpha_);
  }

 private:
  LatticeWindow window_;
  int k_;
  Weight weight_;
  double alpha_;
  std::vector<double> values_;
};

namespace detail {

inline void outer_accumulate(std::span<double> out, const std::vector<std::vector<double>>& samples,
                             std::size_t level, std::size_t prefix, double product) {
  const auto& s = samples[level];
  const std::size_t count = s.size();
  if (level + 1 == samples.size()) {
    double* row = out.data() + prefix * count;
    for (std::size_t o = 0; o < count; ++o) row[o] += product * s[o];
    return;
  }
  for (std::size_t o = 0; o < count; ++o)
    if (s[o] != 0.0) outer_accumulate(out, samples, level + 1, prefix * count + o, product * s[o]);
}

}  // namespace detail

/// Phi_n: restriction of a one-dimensional function to the window sites.
template <Factor1D Factor>
DiscreteVector restrict(const Factor& f, const LatticeWindow& w) {
  DiscreteVector out(w, 1);
  for (int o = 0; o < w.site_count(); ++o) out[static_cast<std::size_t>(o)] = f(w.position(w.site_at(o)));
  return out;
}

/// Phi_n^(k): pointwise tensor evaluation on the k-particle window states.
template <Factor1D Factor>
DiscreteVector restrict_k(const BasicTensor<Factor>& F, const LatticeWindow& w) {
  DiscreteVector out(w, F.k());
  const auto pos = w.positions();
  std::vector<std::vector<double>> samples(static_cast<std::size_t>(F.k()));
  for (const auto& term : F.terms()) {
    if (term.coefficient == 0.0) continue;
    for (int j = 0; j < F.k(); ++j) {
      auto& s = samples[j];
      s.resize(pos.size());
      for (std::size_t o = 0; o < pos.size(); ++o) s[o] = term.factors[j](pos[o]);
    }
    detail::outer_accumulate(out.values(), samples, 0, 0, term.coefficient);
  }
  return out;
}

template <Factor1D Factor>
DiscreteVector restrict_k(const BasicTensor<Factor>& F, const LatticeWindow& w, int k) {
  if (F.k() != k)
    throw std::invalid_argument("tensor of order " + std::to_string(F.k()) + " restricted to a " +
                                std::to_string(k) + "-particle space");
  return restrict_k(F, w);
}

/// n^{-k} sum_x w(x) u(x) v(x) with w = 1 or nu(x).
inline double inner(const DiscreteVector& u, const DiscreteVector& v) {
  if (!u.same_space(v)) throw std::invalid_argument("inner product between vectors of different spaces");
  const double scale = std::pow(static_cast<double>(u.window().scale()), -u.k());
  double s = 0.0;
  if (u.weight() == Weight::uniform) {
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  } else {
    const NuTable nu(u.alpha(), u.k());
    StateOdometer odo(u.window().site_count(), u.k());
    for (std::size_t i = 0; i < u.size(); ++i, odo.advance()) s += nu(odo.offsets()) * u[i] * v[i];
  }
  return scale * s;
}

inline double norm(const DiscreteVector& u) { return std::sqrt(inner(u, u)); }

/// Continuum L2(R^k) norm of a tensor function, by quadrature.
template <Factor1D Factor>
double continuum_norm(const BasicTensor<Factor>& F, const QuadratureSpec& spec = {}) {
  return std::sqrt(std::max(0.0, continuum_norm_squared(F, spec)));
}

/**
 * Default window half-width: 4x the reach of compactly supported factors,
 * the 1e-14 truncation reach of Schwartz factors, plus 2 sqrt(2 alpha T) of
 * diffusive spread over the horizon T.
 */
inline double auto_half_width(const std::vector<SmoothFunction>& functions, double alpha, double horizon) {
  double reach = 0.0;
  for (const auto& f : functions) {
    const double r = f.compact() ? 4.0 * (std::abs(f.center()) + f.width())
                                 : std::abs(f.center()) + f.effective_radius();
    reach = std::max(reach, r);
  }
  return reach + 2.0 * std::sqrt(2.0 * alpha * std::max(0.0, horizon));
}

inline std::vector<SmoothFunction> factors_of(const TensorFunction& F) {
  std::vector<SmoothFunction> out;
  for (const auto& term : F.terms())
    for (const auto& f : term.factors) out.push_back(f);
  return out;
}

struct HilbertOptions {
  std::optional<double> half_width;
  /// When set, the nu-weighted norm at this alpha is reported alongside.
  std::optional<double> nu_alpha;
  QuadratureSpec quadrature;
};

/**
 * Table of (n, |Phi_n F|, |F|, error) with the continuum norm computed once
 * by quadrature; nu-weighted columns are added when requested.
 */
inline ConvergenceTable hilbert_convergence_experiment(const TensorFunction& F, const std::vector<int>& n_grid,
                                                       const HilbertOptions& options = {}) {
  const double target = continuum_norm(F, options.quadrature);
  const double a = options.half_width.value_or(std::max(auto_half_width(factors_of(F), 1.0, 0.0), 1.0));
  ConvergenceTable table;
  table.name = "hilbert";
  table.columns = {"n", "discrete_norm", "continuum_norm", "error"};
  if (options.nu_alpha) {
    table.columns.push_back("nu_norm");
    table.columns.push_back("nu_error");
  }
  for (int n : n_grid) {
    const LatticeWindow w(n, a);
    const auto v = restrict_k(F, w);
    const double dn = norm(v);
    std::vector<double> row{static_cast<double>(n), dn, target, std::abs(dn - target)};
    if (options.nu_alpha) {
      const double nn = norm(v.reweighted(Weight::nu_weighted, *options.nu_alpha));
      row.push_back(nn);
      row.push_back(std::abs(nn - target));
    }
    table.rows.push_back(std::move(row));
  }
  table.fit("error");
  if (options.nu_alpha) table.fit("nu_error");
  return table;
}

}  // namespace mosco
