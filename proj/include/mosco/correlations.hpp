#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosco/convergence.hpp"
#include "mosco/duality.hpp"
#include "mosco/evolution.hpp"
#include "mosco/forms.hpp"
#include "mosco/hilbert.hpp"
#include "mosco/operators.hpp"
#include "mosco/smoothfn.hpp"

namespace mosco {

/**
 * @brief k-point correlation scaling run.
 *
 * The discrete side is n^{-k} sum_x F(x) E[D(xi(x), eta_t)] with eta_0 drawn
 * from the product NB measure of `profile`; the continuum side is
 * int F(z) S_t^{bm,(k)} prod_i rho(z_i) dz with rho the dual-density profile.
 */
struct CorrelationRun {
  TensorFunction observable;
  NBProfile profile;
  double t = 0.0;
  std::vector<int> n_grid;
  std::optional<double> half_width;
  QuadratureSpec quadrature;
  UniformizationSpec uniformization;

  int k() const { return observable.k(); }
  double alpha() const { return profile.alpha(); }
};

inline double correlation_window(const CorrelationRun& run) {
  if (run.t < 0) throw std::invalid_argument("time must be nonnegative");
  const double needed = run.observable.reach();
  if (run.half_width) {
    if (*run.half_width < needed)
      throw std::invalid_argument("window half-width " + std::to_string(*run.half_width) +
                                  " is smaller than the observable's effective reach " + std::to_string(needed));
    return *run.half_width;
  }
  auto fns = factors_of(run.observable);
  fns.push_back(run.profile.rho_tilde());
  return std::max(auto_half_width(fns, run.alpha(), run.t), 1.0);
}

/// x -> integral of D(xi(x), .) against the NB product measure, on every window state.
inline DiscreteVector dual_moment_function(const NBProfile& profile, const LatticeWindow& w, int k) {
  // prod_y rho(y)^{xi(x)(y)} = prod_i rho(x_i), diagonals included
  return restrict_k(tensor_power(profile.rho_tilde(), k), w);
}

inline double discrete_kpoint(const CorrelationRun& run, int n) {
  const LatticeWindow w(n, correlation_window(run));
  const auto G = GeneratorAction::sip(w, run.k(), run.alpha());
  const auto evolved = semigroup_apply(G, run.t, dual_moment_function(run.profile, w, run.k()), run.uniformization);
  return inner(restrict_k(run.observable, w), evolved);
}

inline double continuum_kpoint(const CorrelationRun& run) {
  const HeatFactor evolved_profile(run.profile.rho_tilde(), RateConvention{}.heat_variance(run.alpha(), run.t), false,
                                   run.quadrature);
  double s = 0.0;
  for (const auto& term : run.observable.terms()) {
    double p = term.coefficient;
    for (const auto& f : term.factors) {
      if (p == 0.0) break;
      p *= inner_integral(f, evolved_profile, run.quadrature);
    }
    s += p;
  }
  return s;
}

/// (n, discrete, continuum, rel_err) over the run's grid, with the fitted order of rel_err.
inline ConvergenceTable correlation_experiment(const CorrelationRun& run) {
  const double continuum = continuum_kpoint(run);
  ConvergenceTable table;
  table.name = "correlations";
  table.columns = {"n", "discrete", "continuum", "rel_err"};
  for (int n : run.n_grid) {
    const double d = discrete_kpoint(run, n);
    table.rows.push_back({static_cast<double>(n), d, continuum, relative_error(d, continuum)});
  }
  table.fit("rel_err");
  return table;
}

/**
 * Monte Carlo version of discrete_kpoint: eta_0 sampled from the NB product,
 * configuration SSA to time t, observable averaged over replicas. Only for
 * small windows.
 */
inline MonteCarloEstimate discrete_kpoint_monte_carlo(const CorrelationRun& run, int n, std::size_t replicas,
                                                      std::uint64_t seed) {
  const LatticeWindow w(n, correlation_window(run));
  const auto weights = restrict_k(run.observable, w);
  const auto G = GeneratorAction::sip_config(w, run.alpha());
  const double scale = std::pow(static_cast<double>(n), -run.k());
  std::vector<double> samples(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    auto rng = replica_engine(seed, r);
    const auto eta0 = sample_nb_configuration(run.profile, w, rng);
    const auto eta = ssa_final(G, eta0, run.t, rng);
    double s = 0.0;
    for (std::size_t idx = 0; idx < weights.size(); ++idx) {
      if (weights[idx] == 0.0) continue;
      s += weights[idx] * D_of(xi_of(state_unindex(w, run.k(), idx)), eta, run.alpha());
    }
    samples[r] = scale * s;
  }
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(replicas);
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  var /= static_cast<double>(replicas > 1 ? replicas - 1 : 1);
  return {mean, std::sqrt(var / static_cast<double>(replicas)), replicas};
}

}  // namespace mosco
