#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosco/convergence.hpp"
#include "mosco/duality.hpp"
#include "mosco/hilbert.hpp"
#include "mosco/lattice.hpp"
#include "mosco/operators.hpp"
#include "mosco/quadrature.hpp"
#include "mosco/smoothfn.hpp"

namespace mosco {

struct UniformizationSpec {
  /// Bound on the discarded Poisson tail mass.
  double tolerance = 1e-12;
  std::size_t max_terms = 2'000'000;
};

class UniformizationCapExceeded : public std::runtime_error {
 public:
  explicit UniformizationCapExceeded(double lambda_t)
      : std::runtime_error("uniformization needs more terms than allowed (lambda t = " + std::to_string(lambda_t) + ")"),
        lambda_t_(lambda_t) {}
  double lambda_t() const { return lambda_t_; }

 private:
  double lambda_t_;
};

/// Poisson(mu) probabilities for j = 0..J with tail P(N > J) below tolerance.
inline std::vector<double> poisson_weights(double mu, const UniformizationSpec& spec) {
  if (!(mu >= 0)) throw std::invalid_argument("Poisson mean must be nonnegative");
  std::vector<double> w;
  if (mu == 0.0) return {1.0};
  const double log_mu = std::log(mu);
  for (std::size_t j = 0;; ++j) {
    if (j >= spec.max_terms) throw UniformizationCapExceeded(mu);
    const double p = std::exp(-mu + static_cast<double>(j) * log_mu - std::lgamma(static_cast<double>(j) + 1.0));
    w.push_back(p);
    const double jd = static_cast<double>(j);
    if (jd + 2.0 > mu) {
      // tail <= p_{j+1} / (1 - mu/(j+2)), p_{j+1} = p_j mu/(j+1)
      const double tail = p * (mu / (jd + 1.0)) / (1.0 - mu / (jd + 2.0));
      if (tail < spec.tolerance) return w;
    }
  }
}

/**
 * e^{tG} f by uniformization: sum_j Poisson(lambda t; j) P^j f with
 * P = I + G/lambda, lambda the generator's maximal exit rate. The truncation
 * error is at most spec.tolerance * max|f|.
 */
inline std::vector<double> semigroup_apply(const GeneratorAction& G, double t, std::span<const double> f,
                                           const UniformizationSpec& spec = {}) {
  if (t < 0) throw std::invalid_argument("time must be nonnegative");
  if (f.size() != G.state_count()) throw std::invalid_argument("vector does not match generator dimension");
  const double lambda = G.max_exit_rate();
  std::vector<double> v(f.begin(), f.end());
  if (t == 0.0 || lambda == 0.0) return v;
  const auto weights = poisson_weights(lambda * t, spec);
  std::vector<double> next(v.size());
  std::vector<double> acc(v.size(), 0.0);
  const double inv_lambda = 1.0 / lambda;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    const double wj = weights[j];
    if (wj > 0.0)
      for (std::size_t i = 0; i < v.size(); ++i) acc[i] += wj * v[i];
    if (j + 1 < weights.size()) {
      G.apply_step(v, next, inv_lambda);
      v.swap(next);
    }
  }
  return acc;
}

inline DiscreteVector semigroup_apply(const GeneratorAction& G, double t, const DiscreteVector& f,
                                      const UniformizationSpec& spec = {}) {
  if (!G.coordinate_kind() || !(f.window() == G.window()) || f.k() != G.k())
    throw std::invalid_argument("vector does not match generator dimension");
  return DiscreteVector(f.window(), f.k(), semigroup_apply(G, t, f.values(), spec), f.weight(), f.alpha());
}

/**
 * @brief One factor of a heat-evolved tensor: base convolved with N(0, variance).
 *
 * Gaussian bases use the closed form unless quadrature is forced.
 */
class HeatFactor {
 public:
  HeatFactor(SmoothFunction base, double variance, bool force_quadrature = false, QuadratureSpec spec = {})
      : base_(std::move(base)), variance_(variance), force_quadrature_(force_quadrature), spec_(spec) {
    if (variance < 0) throw std::invalid_argument("heat kernel variance must be nonnegative");
  }

  const SmoothFunction& base() const { return base_; }
  double variance() const { return variance_; }

  double kernel_radius() const { return std::sqrt(variance_) * std::sqrt(-2.0 * std::log(kTruncationLevel)); }

  Interval effective_support() const {
    const auto s = base_.effective_support();
    return {s.lo - kernel_radius(), s.hi + kernel_radius()};
  }

  double operator()(double x) const {
    if (variance_ == 0.0) return base_(x);
    if (base_.kind() == FunctionKind::gaussian && !force_quadrature_) {
      const double s2 = base_.width() * base_.width() + variance_;
      const double d = x - base_.center();
      return base_.amplitude() * base_.width() / std::sqrt(s2) * std::exp(-0.5 * d * d / s2);
    }
    return convolve(x, [this](double y) { return base_(y); });
  }

  double deriv(double x) const {
    if (variance_ == 0.0) return base_.deriv(x);
    if (base_.kind() == FunctionKind::gaussian && !force_quadrature_) {
      const double s2 = base_.width() * base_.width() + variance_;
      return -(*this)(x) * (x - base_.center()) / s2;
    }
    return convolve(x, [this](double y) { return base_.deriv(y); });
  }

 private:
  template <class G>
  double convolve(double x, G&& g) const {
    const auto s = base_.effective_support();
    const double r = kernel_radius();
    const double lo = std::max(s.lo, x - r);
    const double hi = std::min(s.hi, x + r);
    if (!(hi > lo)) return 0.0;
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * variance_);
    return integrate(
               [&](double y) {
                 const double d = x - y;
                 return g(y) * norm * std::exp(-0.5 * d * d / variance_);
               },
               lo, hi, spec_)
        .value;
  }

  SmoothFunction base_;
  double variance_;
  bool force_quadrature_;
  QuadratureSpec spec_;
};

using HeatEvolved = BasicTensor<HeatFactor>;

/// S_t^{bm,(k)} F: coordinate-wise Gaussian convolution with variance 2 alpha t (convention dependent).
inline HeatEvolved heat_apply(const TensorFunction& F, double t, double alpha, RateConvention convention = {},
                              bool force_quadrature = false, const QuadratureSpec& spec = {}) {
  if (t < 0) throw std::invalid_argument("time must be nonnegative");
  const double variance = convention.heat_variance(alpha, t);
  HeatEvolved out(F.k());
  for (const auto& term : F.terms()) {
    std::vector<HeatFactor> factors;
    for (const auto& f : term.factors) factors.emplace_back(f, variance, force_quadrature, spec);
    out.add_term(term.coefficient, std::move(factors));
  }
  return out;
}

/// Per-replica engine: the master seed and replica index are mixed by splitmix64.
inline std::mt19937_64 replica_engine(std::uint64_t master_seed, std::uint64_t replica) {
  auto splitmix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return std::mt19937_64(splitmix(splitmix(master_seed) ^ splitmix(replica + 0x632be59bd9b4e019ULL)));
}

template <class State>
struct Trajectory {
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::vector<double> times;  // times[0] = 0, the initial state
  std::vector<State> states;

  const State& final_state() const { return states.back(); }

  const State& state_at(double t) const {
    std::size_t i = 0;
    while (i + 1 < times.size() && times[i + 1] <= t) ++i;
    return states[i];
  }
};

namespace detail {

template <class Rng>
std::size_t pick(const std::vector<double>& rates, double total, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, total);
  const double target = u(rng);
  double running = 0.0;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    running += rates[i];
    if (target < running) return i;
  }
  // rounding at the top end: last move with positive rate
  for (std::size_t i = rates.size(); i-- > 0;)
    if (rates[i] > 0.0) return i;
  return rates.size() - 1;
}

inline void check_total(double total) {
  if (!std::isfinite(total)) throw std::overflow_error("total jump rate is not finite");
}

}  // namespace detail

/// One exact-law path of the configuration process up to the horizon; returns the final state only.
template <class Rng>
ParticleConfiguration ssa_final(const GeneratorAction& G, ParticleConfiguration eta, double horizon, Rng& rng) {
  std::exponential_distribution<double> unit(1.0);
  std::vector<double> rates;
  double time = 0.0;
  while (true) {
    const auto moves = G.build_config_rates(eta);
    rates.clear();
    double total = 0.0;
    for (const auto& m : moves) rates.push_back(m.rate), total += m.rate;
    detail::check_total(total);
    if (total == 0.0) return eta;
    time += unit(rng) / total;
    if (time > horizon) return eta;
    const auto& m = moves[detail::pick(rates, total, rng)];
    eta.move(m.site, m.site + m.sigma);
  }
}

template <class Rng>
CoordState ssa_final(const GeneratorAction& G, CoordState x, double horizon, Rng& rng) {
  std::exponential_distribution<double> unit(1.0);
  std::vector<double> rates;
  double time = 0.0;
  while (true) {
    auto moves = G.enumerate_moves(x);
    rates.clear();
    double total = 0.0;
    for (const auto& m : moves) rates.push_back(m.rate), total += m.rate;
    detail::check_total(total);
    if (total == 0.0) return x;
    time += unit(rng) / total;
    if (time > horizon) return x;
    x = std::move(moves[detail::pick(rates, total, rng)].target);
  }
}

/// Recorded SSA path of the configuration process (sip_config generator).
inline Trajectory<ParticleConfiguration> ssa_simulate(const GeneratorAction& G, const ParticleConfiguration& eta0,
                                                      double horizon, std::uint64_t seed) {
  if (G.kind() != GeneratorKind::sip_config) throw std::invalid_argument("configuration SSA needs a sip_config generator");
  if (horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
  auto rng = replica_engine(seed, 0);
  std::exponential_distribution<double> unit(1.0);
  Trajectory<ParticleConfiguration> traj{seed, horizon, {0.0}, {eta0}};
  ParticleConfiguration eta = eta0;
  std::vector<double> rates;
  double time = 0.0;
  while (true) {
    const auto moves = G.build_config_rates(eta);
    rates.clear();
    double total = 0.0;
    for (const auto& m : moves) rates.push_back(m.rate), total += m.rate;
    detail::check_total(total);
    if (total == 0.0) break;
    time += unit(rng) / total;
    if (time > horizon) break;
    const auto& m = moves[detail::pick(rates, total, rng)];
    eta.move(m.site, m.site + m.sigma);
    traj.times.push_back(time);
    traj.states.push_back(eta);
  }
  return traj;
}

/// Recorded SSA path of a coordinate process (irw_k or sip_k generator).
inline Trajectory<CoordState> ssa_simulate(const GeneratorAction& G, const CoordState& x0, double horizon,
                                           std::uint64_t seed) {
  if (!G.coordinate_kind()) throw std::invalid_argument("coordinate SSA needs an irw_k or sip_k generator");
  if (horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
  auto rng = replica_engine(seed, 0);
  std::exponential_distribution<double> unit(1.0);
  Trajectory<CoordState> traj{seed, horizon, {0.0}, {x0}};
  CoordState x = x0;
  std::vector<double> rates;
  double time = 0.0;
  while (true) {
    auto moves = G.enumerate_moves(x);
    rates.clear();
    double total = 0.0;
    for (const auto& m : moves) rates.push_back(m.rate), total += m.rate;
    detail::check_total(total);
    if (total == 0.0) break;
    time += unit(rng) / total;
    if (time > horizon) break;
    x = std::move(moves[detail::pick(rates, total, rng)].target);
    traj.times.push_back(time);
    traj.states.push_back(x);
  }
  return traj;
}

inline void write_jsonl(std::ostream& os, const Trajectory<ParticleConfiguration>& traj) {
  os.precision(17);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    os << "{\"time\":" << traj.times[i] << ",\"occupancy\":{";
    bool first = true;
    for (const auto& [site, c] : traj.states[i].counts()) {
      os << (first ? "" : ",") << '"' << site << "\":" << c;
      first = false;
    }
    os << "}}\n";
  }
}

inline void write_jsonl(std::ostream& os, const Trajectory<CoordState>& traj) {
  os.precision(17);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    os << "{\"time\":" << traj.times[i] << ",\"sites\":[";
    for (std::size_t j = 0; j < traj.states[i].sites.size(); ++j) os << (j ? "," : "") << traj.states[i].sites[j];
    os << "]}\n";
  }
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t replicas = 0;
};

/// Mean and standard error of observable(final state) over independent replicas, summed in replica order.
template <class State, class Observable>
MonteCarloEstimate ssa_expectation(const GeneratorAction& G, const State& initial, double horizon,
                                   Observable&& observable, std::size_t replicas, std::uint64_t seed) {
  if (replicas < 2) throw std::invalid_argument("need at least two replicas");
  std::vector<double> samples(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    auto rng = replica_engine(seed, r);
    samples[r] = observable(ssa_final(G, initial, horizon, rng));
  }
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(replicas);
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(replicas - 1);
  return {mean, std::sqrt(var / static_cast<double>(replicas)), replicas};
}

/// y -> D(xi(y), eta) on every k-particle window state.
inline DiscreteVector dual_function(const LatticeWindow& w, int k, const ParticleConfiguration& eta, double alpha) {
  DiscreteVector f(w, k);
  for (std::size_t idx = 0; idx < f.size(); ++idx) f[idx] = D_of(xi_of(state_unindex(w, k, idx)), eta, alpha);
  return f;
}

struct DualityCheckResult {
  double mc_estimate = 0.0;
  double mc_stderr = 0.0;
  double exact_dual = 0.0;
  bool ok = false;
};

/**
 * Self-duality at coordinate level: E_eta0[D(xi(x), eta_t)] by SSA of the
 * configuration process against E_x[D(xi(X_t), eta0)] by uniformization of
 * the k-particle SIP.
 */
inline DualityCheckResult duality_check(const LatticeWindow& w, const ParticleConfiguration& eta0, const CoordState& x,
                                        double t, double alpha, std::size_t replicas, std::uint64_t seed,
                                        const UniformizationSpec& spec = {}) {
  if (!eta0.fits(w)) throw std::invalid_argument("initial configuration leaves the window");
  const auto dual = GeneratorAction::sip(w, x.k(), alpha);
  const auto evolved = semigroup_apply(dual, t, dual_function(w, x.k(), eta0, alpha), spec);
  DualityCheckResult r;
  r.exact_dual = evolved.at(x);

  const auto config = GeneratorAction::sip_config(w, alpha);
  const auto xi = xi_of(x);
  const auto mc = ssa_expectation(
      config, eta0, t, [&](const ParticleConfiguration& eta) { return D_of(xi, eta, alpha); }, replicas, seed);
  r.mc_estimate = mc.mean;
  r.mc_stderr = mc.standard_error;
  const double diff = std::abs(r.mc_estimate - r.exact_dual);
  r.ok = r.mc_stderr > 0.0 ? diff <= 3.0 * r.mc_stderr : diff <= 1e-12 * std::max(1.0, std::abs(r.exact_dual));
  return r;
}

/// E_eta0[D(xi(x), eta_t)] exactly, by uniformization over the enumerated configuration space.
inline double configuration_dual_expectation(const LatticeWindow& w, const ParticleConfiguration& eta0,
                                             const CoordState& x, double t, double alpha,
                                             const UniformizationSpec& spec = {}) {
  const auto G = GeneratorAction::sip_config(w, alpha, eta0.total());
  const auto& space = G.config_space();
  const auto xi = xi_of(x);
  std::vector<double> f(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) f[i] = D_of(xi, space.configuration(i, w), alpha);
  return semigroup_apply(G, t, f, spec)[space.index_of(eta0, w)];
}

struct SemigroupOptions {
  std::optional<double> half_width;
  RateConvention convention;
  std::vector<GeneratorKind> kinds{GeneratorKind::irw_k, GeneratorKind::sip_k};
  UniformizationSpec uniformization;
};

/**
 * err(n) = |T_n(t) Phi_n F - Phi_n S_t F|_{n,k} (uniform weight) for each
 * requested coordinate generator. Columns: n, then err_<kind> per kind.
 */
inline ConvergenceTable semigroup_convergence_experiment(const TensorFunction& F, double alpha, double t,
                                                         const std::vector<int>& n_grid,
                                                         const SemigroupOptions& options = {}) {
  if (t < 0) throw std::invalid_argument("time must be nonnegative");
  const double a = options.half_width.value_or(std::max(auto_half_width(factors_of(F), alpha, t), 1.0));
  const auto target = heat_apply(F, t, alpha, options.convention);
  ConvergenceTable table;
  table.name = "semigroup";
  table.columns = {"n"};
  for (auto kind : options.kinds) {
    if (kind == GeneratorKind::sip_config) throw std::invalid_argument("semigroup experiment needs a coordinate generator");
    table.columns.push_back(std::string("err_") + to_string(kind));
  }
  for (int n : n_grid) {
    const LatticeWindow w(n, a);
    const auto start = restrict_k(F, w);
    const auto expected = restrict_k(target, w);
    std::vector<double> row{static_cast<double>(n)};
    for (auto kind : options.kinds) {
      const auto G = kind == GeneratorKind::irw_k ? GeneratorAction::irw(w, F.k(), alpha, options.convention)
                                                  : GeneratorAction::sip(w, F.k(), alpha);
      auto diff = semigroup_apply(G, t, start, options.uniformization);
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= expected[i];
      row.push_back(norm(diff));
    }
    table.rows.push_back(std::move(row));
  }
  for (std::size_t c = 1; c < table.columns.size(); ++c) table.fit(table.columns[c]);
  return table;
}

}  // namespace mosco
