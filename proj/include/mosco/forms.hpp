#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mosco/convergence.hpp"
#include "mosco/duality.hpp"
#include "mosco/hilbert.hpp"
#include "mosco/operators.hpp"
#include "mosco/smoothfn.hpp"

namespace mosco {

/// A Dirichlet form value split into its walk and inclusion contributions.
struct FormValue {
  double value = 0.0;
  double walk = 0.0;
  double inclusion = 0.0;
};

namespace detail {

struct Strides {
  std::array<std::size_t, GeneratorAction::kMaxParticles> stride{};
};

inline Strides strides_for(int site_count, int k) {
  if (k < 1 || k > GeneratorAction::kMaxParticles) throw std::invalid_argument("unsupported particle count");
  Strides s;
  s.stride[k - 1] = 1;
  for (int i = k - 2; i >= 0; --i) s.stride[i] = s.stride[i + 1] * static_cast<std::size_t>(site_count);
  return s;
}

}  // namespace detail

/**
 * k independent walkers, as displayed:
 * (r / (2 n^k)) sum_i sum_x sum_sigma (f(x^{i,sigma}) - f(x))^2,
 * r the per-direction hop rate (alpha n^2 by default). Blocked moves add 0.
 */
inline FormValue dirichlet_irw_k(const DiscreteVector& f, double alpha, RateConvention convention = {}) {
  if (f.weight() != Weight::uniform) throw std::invalid_argument("independent-walker form needs a uniform-weight vector");
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  const auto& w = f.window();
  const int s = w.site_count();
  const int k = f.k();
  const auto st = detail::strides_for(s, k);
  const auto values = f.values();
  double sum = 0.0;
  StateOdometer odo(s, k);
  for (std::size_t idx = 0; idx < f.size(); ++idx, odo.advance()) {
    const auto c = odo.offsets();
    const double fx = values[idx];
    for (int i = 0; i < k; ++i) {
      if (c[i] > 0) {
        const double d = values[idx - st.stride[i]] - fx;
        sum += d * d;
      }
      if (c[i] < s - 1) {
        const double d = values[idx + st.stride[i]] - fx;
        sum += d * d;
      }
    }
  }
  const double coeff = convention.irw_hop_rate(alpha, w.scale()) / (2.0 * std::pow(static_cast<double>(w.scale()), k));
  const double v = coeff * sum;
  return {v, v, 0.0};
}

/**
 * k SIP particles, as displayed: a nu-weighted walk part with rate alpha n^2
 * plus an inclusion part carrying 1{x_j = x_i + sigma/n}. The vector's own
 * weight tag is ignored; the form carries nu itself.
 */
inline FormValue dirichlet_sip_k(const DiscreteVector& f, double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  const auto& w = f.window();
  const int s = w.site_count();
  const int k = f.k();
  const auto st = detail::strides_for(s, k);
  const NuTable nu(alpha, k);
  const auto values = f.values();
  double walk = 0.0;
  double inclusion = 0.0;
  StateOdometer odo(s, k);
  for (std::size_t idx = 0; idx < f.size(); ++idx, odo.advance()) {
    const auto c = odo.offsets();
    const double fx = values[idx];
    const double weight = nu(c);
    for (int i = 0; i < k; ++i)
      for (int sigma : {-1, 1}) {
        const int target = c[i] + sigma;
        if (target < 0 || target >= s) continue;
        const std::size_t to = sigma > 0 ? idx + st.stride[i] : idx - st.stride[i];
        const double d = values[to] - fx;
        const double sq = weight * d * d;
        walk += sq;
        int others = 0;
        for (int j = 0; j < k; ++j) others += (j != i && c[j] == target);
        inclusion += others * sq;
      }
  }
  const double n2 = static_cast<double>(w.scale()) * w.scale();
  const double coeff = n2 / (2.0 * std::pow(static_cast<double>(w.scale()), k));
  FormValue out;
  out.walk = alpha * coeff * walk;
  out.inclusion = coeff * inclusion;
  out.value = out.walk + out.inclusion;
  return out;
}

/// c sum_i int (d_i F)^2 over R^k with c = alpha (alpha/2 under the halved convention).
inline double dirichlet_bm_k(const TensorFunction& F, double alpha, RateConvention convention = {},
                             const QuadratureSpec& spec = {}) {
  const auto& terms = F.terms();
  const std::size_t m = terms.size();
  const int k = F.k();
  // per-coordinate Gram matrices of values and derivatives
  std::vector<std::vector<double>> plain(static_cast<std::size_t>(k), std::vector<double>(m * m));
  std::vector<std::vector<double>> grad(static_cast<std::size_t>(k), std::vector<double>(m * m));
  for (int j = 0; j < k; ++j)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a; b < m; ++b) {
        const auto& fa = terms[a].factors[j];
        const auto& fb = terms[b].factors[j];
        plain[j][a * m + b] = plain[j][b * m + a] = inner_integral(fa, fb, spec);
        grad[j][a * m + b] = grad[j][b * m + a] = derivative_inner_integral(fa, fb, spec);
      }
  double total = 0.0;
  for (int i = 0; i < k; ++i)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) {
        double p = terms[a].coefficient * terms[b].coefficient;
        for (int j = 0; j < k && p != 0.0; ++j) p *= (j == i ? grad[j][a * m + b] : plain[j][a * m + b]);
        total += p;
      }
  return convention.bm_coefficient(alpha) * total;
}

struct DominationResult {
  FormValue sip;
  FormValue irw;
  bool ok = false;
};

/// Checks E_sip(f) >= E_irw(f) up to 1e-12 relative; needs alpha >= 1.
inline DominationResult domination_check(const DiscreteVector& f, double alpha) {
  if (alpha < 1.0) throw std::invalid_argument("domination check requires alpha >= 1");
  DominationResult r;
  r.sip = dirichlet_sip_k(f, alpha);
  r.irw = dirichlet_irw_k(f.weight() == Weight::uniform ? f : f.reweighted(Weight::uniform), alpha);
  r.ok = r.sip.value >= r.irw.value - 1e-12 * std::abs(r.irw.value);
  return r;
}

struct FormOptions {
  std::optional<double> half_width;
  RateConvention convention;
  QuadratureSpec quadrature;
};

inline double form_window(const TensorFunction& F, const FormOptions& options) {
  return options.half_width.value_or(std::max(auto_half_width(factors_of(F), 1.0, 0.0), 1.0));
}

inline double relative_error(double value, double target) {
  return target != 0.0 ? std::abs(value - target) / std::abs(target) : std::abs(value - target);
}

/// (n, |E_sip - E_irw|, E_irw, E_sip) on Phi_n^(k) F.
inline ConvergenceTable form_gap_experiment(const TensorFunction& F, double alpha, const std::vector<int>& n_grid,
                                            const FormOptions& options = {}) {
  const double a = form_window(F, options);
  ConvergenceTable table;
  table.name = "form_gap";
  table.columns = {"n", "gap", "form_irw", "form_sip"};
  for (int n : n_grid) {
    const auto v = restrict_k(F, LatticeWindow(n, a));
    const double irw = dirichlet_irw_k(v, alpha, options.convention).value;
    const double sip = dirichlet_sip_k(v, alpha).value;
    table.rows.push_back({static_cast<double>(n), std::abs(sip - irw), irw, sip});
  }
  table.fit("gap");
  return table;
}

/// Discrete forms on Phi_n^(k) F against the Brownian form of F.
inline ConvergenceTable form_convergence_experiment(const TensorFunction& F, double alpha,
                                                    const std::vector<int>& n_grid, const FormOptions& options = {}) {
  const double a = form_window(F, options);
  const double bm = dirichlet_bm_k(F, alpha, options.convention, options.quadrature);
  ConvergenceTable table;
  table.name = "forms";
  table.columns = {"n", "form_irw", "form_sip", "form_bm", "rel_err_irw", "rel_err_sip", "gap"};
  for (int n : n_grid) {
    const auto v = restrict_k(F, LatticeWindow(n, a));
    const double irw = dirichlet_irw_k(v, alpha, options.convention).value;
    const double sip = dirichlet_sip_k(v, alpha).value;
    table.rows.push_back({static_cast<double>(n), irw, sip, bm, relative_error(irw, bm), relative_error(sip, bm),
                          std::abs(sip - irw)});
  }
  table.fit("rel_err_irw");
  table.fit("rel_err_sip");
  table.fit("gap");
  return table;
}

}  // namespace mosco
