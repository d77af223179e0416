#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosco/config.hpp"
#include "mosco/convergence.hpp"
#include "mosco/correlations.hpp"
#include "mosco/duality.hpp"
#include "mosco/evolution.hpp"
#include "mosco/forms.hpp"
#include "mosco/hilbert.hpp"
#include "mosco/operators.hpp"
#include "mosco/report.hpp"

namespace mosco {

inline constexpr const char* kToolVersion = "1.0.0";

/// One pass/fail check: value <relation> threshold.
struct Gate {
  std::string name;
  double value = 0.0;
  std::string relation;
  double threshold = 0.0;
  bool pass = false;
};

struct ExperimentResult {
  std::string experiment;
  std::vector<ConvergenceTable> tables;
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  std::vector<Gate> gates;
  double wall_clock_s = 0.0;

  bool all_pass() const {
    return std::all_of(gates.begin(), gates.end(), [](const Gate& g) { return g.pass; });
  }
  void at_most(std::string name, double value, double threshold) {
    gates.push_back({std::move(name), value, "<=", threshold, value <= threshold});
  }
  void at_least(std::string name, double value, double threshold) {
    gates.push_back({std::move(name), value, ">=", threshold, value >= threshold});
  }
  void holds(std::string name, bool ok) { gates.push_back({std::move(name), ok ? 1.0 : 0.0, "==", 1.0, ok}); }
};

namespace detail {

inline double last(const ConvergenceTable& t, const std::string& column) { return t.column(column).back(); }

inline double order_or_nan(const ConvergenceTable& t, const std::string& column) {
  auto it = t.fitted_orders.find(column);
  return it == t.fitted_orders.end() ? std::nan("") : it->second;
}

inline bool want_decreasing(const ExperimentConfig& cfg) { return cfg.gate("require_decreasing", 1.0) != 0.0; }

inline void decreasing_gate(ExperimentResult& r, const ConvergenceTable& t, const std::string& column) {
  r.holds(column + " strictly decreasing", strictly_decreasing(t.column(column)));
}

}  // namespace detail

/// Random tensor with 1 to 3 terms mixing all three factor kinds, centred within [-0.6, 0.6].
template <class Rng>
TensorFunction random_tensor(int k, Rng& rng) {
  std::uniform_real_distribution<double> centre(-0.6, 0.6), coef(-2.0, 2.0), u(0.0, 1.0);
  std::uniform_int_distribution<int> terms(1, 3), kind(0, 2), degree(0, 3);
  TensorFunction F(k);
  const int m = terms(rng);
  for (int t = 0; t < m; ++t) {
    std::vector<SmoothFunction> factors;
    for (int j = 0; j < k; ++j) {
      switch (kind(rng)) {
        case 0: factors.push_back(SmoothFunction::bump(centre(rng), 0.1 + 0.4 * u(rng), 1.0)); break;
        case 1: factors.push_back(SmoothFunction::gaussian(centre(rng), 0.05 + 0.35 * u(rng), 1.0)); break;
        default: factors.push_back(SmoothFunction::hermite_gaussian(degree(rng), centre(rng), 0.1 + 0.2 * u(rng)));
      }
    }
    F.add_term(coef(rng), std::move(factors));
  }
  return F;
}

inline ExperimentResult run_hilbert(const ExperimentConfig& cfg) {
  HilbertOptions options;
  options.half_width = cfg.half_width;
  options.nu_alpha = cfg.alpha;
  ExperimentResult r;
  auto table = hilbert_convergence_experiment(*cfg.observable, cfg.n_grid, options);
  r.metrics["k"] = cfg.observable->k();
  r.metrics["continuum_norm"] = table.rows.front()[2];
  r.metrics["final_error"] = detail::last(table, "error");
  r.metrics["order"] = detail::order_or_nan(table, "error");
  r.metrics["final_nu_error"] = detail::last(table, "nu_error");
  r.metrics["nu_order"] = detail::order_or_nan(table, "nu_error");
  if (detail::want_decreasing(cfg)) detail::decreasing_gate(r, table, "error");
  r.at_least("fitted order of error", detail::order_or_nan(table, "error"), cfg.gate("min_order", 1.5));
  r.at_most("final error", detail::last(table, "error"), cfg.gate("max_final_error", 1e-4));
  r.tables.push_back(std::move(table));
  return r;
}

/**
 * Under the halved convention only the independent walkers are rescaled, so
 * the SIP column is reported without a gate.
 */
inline ExperimentResult run_forms(const ExperimentConfig& cfg) {
  FormOptions options;
  options.half_width = cfg.half_width;
  options.convention = cfg.convention();
  ExperimentResult r;
  auto table = form_convergence_experiment(*cfg.observable, cfg.alpha, cfg.n_grid, options);
  const int k = cfg.observable->k();
  const double tol = cfg.gate("max_rel_err", 1e-2);
  r.metrics["k"] = k;
  r.metrics["form_bm"] = table.rows.front()[3];
  r.metrics["final_rel_err_irw"] = detail::last(table, "rel_err_irw");
  r.metrics["final_rel_err_sip"] = detail::last(table, "rel_err_sip");
  r.metrics["final_gap"] = detail::last(table, "gap");
  r.metrics["gap_order"] = detail::order_or_nan(table, "gap");
  r.at_most("final rel_err_irw", detail::last(table, "rel_err_irw"), tol);
  if (!cfg.rate_halved) r.at_most("final rel_err_sip", detail::last(table, "rel_err_sip"), tol);
  if (detail::want_decreasing(cfg)) {
    detail::decreasing_gate(r, table, "rel_err_irw");
    if (!cfg.rate_halved) detail::decreasing_gate(r, table, "rel_err_sip");
    if (k >= 2) detail::decreasing_gate(r, table, "gap");
  }
  if (k >= 2) r.at_least("fitted order of gap", detail::order_or_nan(table, "gap"), cfg.gate("min_gap_order", 0.8));
  r.tables.push_back(std::move(table));
  return r;
}

inline ExperimentResult run_domination(const ExperimentConfig& cfg) {
  const auto alphas = cfg.alphas.empty() ? std::vector<double>{1.0, 1.5, 3.0} : cfg.alphas;
  const int k = cfg.k.value_or(2);
  const int n = cfg.n_grid.empty() ? 8 : cfg.n_grid.front();
  const LatticeWindow w(n, cfg.half_width.value_or(1.0));
  for (double a : alphas)
    if (a < 1.0) throw std::invalid_argument("domination needs every alpha >= 1");
  auto rng = replica_engine(cfg.seed, 0);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  ConvergenceTable table;
  table.name = "domination";
  table.columns = {"case", "alpha", "smooth", "form_sip", "form_irw", "relative_margin"};
  double worst = std::numeric_limits<double>::infinity();
  double case_id = 0;
  auto record = [&](const DiscreteVector& f, double alpha, bool smooth) {
    const auto d = domination_check(f, alpha);
    const double margin = (d.sip.value - d.irw.value) / std::max(std::abs(d.irw.value), 1e-300);
    worst = std::min(worst, margin);
    table.rows.push_back({case_id++, alpha, smooth ? 1.0 : 0.0, d.sip.value, d.irw.value, margin});
  };
  for (double alpha : alphas) {
    for (std::size_t i = 0; i < cfg.random_vectors; ++i) {
      DiscreteVector f(w, k);
      for (auto& v : f.values()) v = value(rng);
      record(f, alpha, false);
    }
    for (std::size_t i = 0; i < cfg.smooth_functions; ++i) record(restrict_k(random_tensor(k, rng), w), alpha, true);
  }
  ExperimentResult r;
  r.metrics["cases"] = table.rows.size();
  r.metrics["min_relative_margin"] = worst;
  r.at_least("min relative margin E_sip - E_irw", worst, -cfg.gate("relative_tolerance", 1e-12));
  r.tables.push_back(std::move(table));
  return r;
}

inline ExperimentResult run_balance(const ExperimentConfig& cfg) {
  const auto alphas = cfg.alphas.empty() ? std::vector<double>{0.5, 1.0, 2.7} : cfg.alphas;
  const int n = cfg.n_grid.empty() ? 8 : cfg.n_grid.front();
  const LatticeWindow w(n, cfg.half_width.value_or(1.0));
  auto rng = replica_engine(cfg.seed, 0);
  std::uniform_int_distribution<int> centre(w.min_site(), w.max_site()), jitter(-1, 1), sign(0, 1);
  ConvergenceTable table;
  table.name = "balance";
  table.columns = {"alpha", "k", "edges", "max_residual"};
  double worst = 0.0;
  for (double alpha : alphas)
    for (int k = 1; k <= cfg.k_max; ++k) {
      std::uniform_int_distribution<int> particle(0, k - 1);
      double m = 0.0;
      for (std::size_t e = 0; e < cfg.edges;) {
        // clustered states: frequent coincidences and neighbours
        const int c = centre(rng);
        CoordState x(std::vector<int>(static_cast<std::size_t>(k)));
        for (auto& s : x.sites) s = std::clamp(c + jitter(rng), w.min_site(), w.max_site());
        const int i = particle(rng);
        const int sigma = sign(rng) ? 1 : -1;
        if (!apply_move(w, x, i, sigma)) continue;
        m = std::max(m, detailed_balance_residual(w, x, i, sigma, alpha));
        ++e;
      }
      worst = std::max(worst, m);
      table.rows.push_back({alpha, static_cast<double>(k), static_cast<double>(cfg.edges), m});
    }
  ExperimentResult r;
  r.metrics["max_residual"] = worst;
  r.at_most("max detailed-balance log residual", worst, cfg.gate("max_residual", 1e-10));
  r.tables.push_back(std::move(table));
  return r;
}

/// Seed of the v-th repeated duality check, derived from the master seed; 53 bits so CSV values are exact.
inline std::uint64_t variation_seed(std::uint64_t master, std::size_t v) {
  return replica_engine(master, 0x5eed0000ULL + v)() & ((std::uint64_t{1} << 53) - 1);
}

/**
 * Product NB moments on random dual configurations (1 to 4 distinct sites,
 * multiplicities up to 4): closed form against pmf summation.
 */
inline ConvergenceTable nb_moment_table(const NBProfile& profile, const LatticeWindow& w, std::size_t cases,
                                        std::uint64_t seed) {
  auto rng = replica_engine(seed, 0xb0b);
  std::uniform_int_distribution<int> site(w.min_site(), w.max_site()), distinct(1, 4), mult(1, 4);
  ConvergenceTable nb;
  nb.name = "nb_moments";
  nb.columns = {"case", "particles", "closed_form", "brute_force", "abs_err"};
  for (std::size_t c = 0; c < cases; ++c) {
    DualityConfig xi;
    const int d = std::min(distinct(rng), w.site_count());
    while (static_cast<int>(xi.counts().size()) < d) {
      const int s = site(rng);
      if (xi[s] == 0) xi.add(s, mult(rng));
    }
    const double closed = factorized_D_moment(xi, profile, w);
    double brute = 1.0;
    for (const auto& [s, m] : xi.counts()) brute *= nb_moment_bruteforce(m, w.position(s), profile);
    nb.rows.push_back({static_cast<double>(c), static_cast<double>(xi.total()), closed, brute, std::abs(closed - brute)});
  }
  return nb;
}

inline ExperimentResult run_duality(const ExperimentConfig& cfg) {
  const LatticeWindow w(cfg.n_grid.front(), *cfg.half_width);
  const auto& eta0 = *cfg.eta0;
  const auto& x = *cfg.x;
  if (!eta0.fits(w)) throw std::invalid_argument("eta0 does not fit the window");
  state_index(w, x);
  const auto dual = GeneratorAction::sip(w, x.k(), cfg.alpha);
  const double lambda = dual.max_exit_rate();
  const double t = cfg.t ? *cfg.t : *cfg.lambda_t / lambda;

  ExperimentResult r;
  r.metrics["sites"] = w.site_count();
  r.metrics["particles"] = eta0.total();
  r.metrics["k"] = x.k();
  r.metrics["lambda"] = lambda;
  r.metrics["t"] = t;

  ConvergenceTable runs;
  runs.name = "duality";
  runs.columns = {"run", "seed", "mc_estimate", "mc_stderr", "exact_dual", "z_score"};
  double worst_variation = 0.0;
  for (std::size_t v = 0; v <= cfg.seed_variations; ++v) {
    const std::uint64_t seed = v == 0 ? cfg.seed : variation_seed(cfg.seed, v);
    const auto d = duality_check(w, eta0, x, t, cfg.alpha, cfg.replicas, seed);
    const double z = d.mc_stderr > 0 ? std::abs(d.mc_estimate - d.exact_dual) / d.mc_stderr
                                     : (d.mc_estimate == d.exact_dual ? 0.0 : INFINITY);
    runs.rows.push_back({static_cast<double>(v), static_cast<double>(seed), d.mc_estimate, d.mc_stderr, d.exact_dual, z});
    if (v == 0) {
      r.metrics["mc_estimate"] = d.mc_estimate;
      r.metrics["mc_stderr"] = d.mc_stderr;
      r.metrics["exact_dual"] = d.exact_dual;
      r.metrics["z_score"] = z;
      r.at_most("z-score of MC vs exact dual", z, cfg.gate("sigma", 3.0));
    } else {
      worst_variation = std::max(worst_variation, z);
    }
  }
  if (cfg.seed_variations > 0) {
    r.metrics["max_variation_z_score"] = worst_variation;
    r.at_most("max z-score over seed variations", worst_variation, cfg.gate("variation_sigma", 5.0));
  }
  // exact configuration-space evaluation of the left-hand side, when small enough
  try {
    const double lhs = configuration_dual_expectation(w, eta0, x, t, cfg.alpha);
    const double exact = runs.rows.front()[4];
    r.metrics["configuration_exact"] = lhs;
    r.at_most("configuration-space vs dual relative difference", relative_error(lhs, exact), 1e-9);
  } catch (const std::length_error&) {
    r.metrics["configuration_exact"] = nullptr;
  }
  r.tables.push_back(std::move(runs));

  const NBProfile profile(cfg.rho.value_or(SmoothFunction::gaussian(0.0, std::sqrt(0.5), 0.5)), cfg.alpha);
  auto nb = nb_moment_table(profile, w, cfg.nb_cases, cfg.seed);
  if (cfg.nb_cases > 0) {
    double worst_nb = 0.0;
    for (double e : nb.column("abs_err")) worst_nb = std::max(worst_nb, e);
    r.metrics["nb_max_abs_err"] = worst_nb;
    r.at_most("NB closed form vs brute force", worst_nb, cfg.gate("nb_tolerance", 1e-8));
  }
  r.tables.push_back(std::move(nb));
  return r;
}

inline ExperimentResult run_semigroup(const ExperimentConfig& cfg) {
  SemigroupOptions options;
  options.half_width = cfg.half_width;
  options.convention = cfg.convention();
  if (!cfg.kinds.empty()) options.kinds = cfg.kinds;
  if (cfg.rate_halved) {
    if (!cfg.kinds.empty() &&
        std::find(cfg.kinds.begin(), cfg.kinds.end(), GeneratorKind::sip_k) != cfg.kinds.end())
      throw std::invalid_argument("sip_k has no halved-rate variant; use kinds = irw_k with rate_halved");
    options.kinds = {GeneratorKind::irw_k};
  }
  ExperimentResult r;
  auto table = semigroup_convergence_experiment(*cfg.observable, cfg.alpha, *cfg.t, cfg.n_grid, options);
  r.metrics["k"] = cfg.observable->k();
  r.metrics["t"] = *cfg.t;
  for (std::size_t c = 1; c < table.columns.size(); ++c) {
    const auto& col = table.columns[c];
    r.metrics["final_" + col] = detail::last(table, col);
    r.metrics["order_" + col] = detail::order_or_nan(table, col);
    if (detail::want_decreasing(cfg) && *cfg.t > 0) detail::decreasing_gate(r, table, col);
    r.at_most("final " + col, detail::last(table, col), cfg.gate("max_final_error", 5e-3));
  }
  r.tables.push_back(std::move(table));
  return r;
}

inline ExperimentResult run_correlations(const ExperimentConfig& cfg) {
  CorrelationRun run{*cfg.observable, NBProfile(*cfg.rho, cfg.alpha), *cfg.t, cfg.n_grid, cfg.half_width, {}, {}};
  ExperimentResult r;
  auto table = correlation_experiment(run);
  r.metrics["k"] = cfg.observable->k();
  r.metrics["window_half_width"] = correlation_window(run);
  r.metrics["continuum"] = table.rows.front()[2];
  r.metrics["final_rel_err"] = detail::last(table, "rel_err");
  r.metrics["order"] = detail::order_or_nan(table, "rel_err");
  if (detail::want_decreasing(cfg)) detail::decreasing_gate(r, table, "rel_err");
  r.at_most("final rel_err", detail::last(table, "rel_err"), cfg.gate("max_rel_err", 2e-2));
  r.tables.push_back(std::move(table));
  return r;
}

/// Dispatches on cfg.experiment and times the run; adds the runtime gate when configured.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult r;
  const auto& e = cfg.experiment;
  if (e == "hilbert") r = run_hilbert(cfg);
  else if (e == "forms") r = run_forms(cfg);
  else if (e == "domination") r = run_domination(cfg);
  else if (e == "balance") r = run_balance(cfg);
  else if (e == "duality") r = run_duality(cfg);
  else if (e == "semigroup") r = run_semigroup(cfg);
  else if (e == "correlations") r = run_correlations(cfg);
  else throw std::invalid_argument("unknown experiment '" + e + "'");
  r.experiment = e;
  r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (auto it = cfg.gates.find("max_runtime_s"); it != cfg.gates.end())
    r.at_most("wall clock seconds", r.wall_clock_s, it->second);
  return r;
}

/// Manifest with fixed key order: tool, version, experiment, seed, config, metrics, ...
inline nlohmann::ordered_json build_manifest(const ExperimentConfig& cfg, const ExperimentResult& r,
                                             const std::vector<std::string>& artifacts) {
  nlohmann::ordered_json m;
  m["tool"] = "mosco-lab";
  m["version"] = kToolVersion;
  m["experiment"] = r.experiment;
  m["seed"] = cfg.seed;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& [key, value] : cfg.echo) {
    const auto dot = key.find('.');
    config[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  m["config"] = config;
  m["metrics"] = r.metrics;
  nlohmann::ordered_json orders = nlohmann::ordered_json::object();
  for (const auto& t : r.tables)
    if (!t.fitted_orders.empty())
      for (const auto& [col, v] : t.fitted_orders) orders[t.name][col] = v;
  m["fitted_orders"] = orders;
  nlohmann::ordered_json gates = nlohmann::ordered_json::array();
  for (const auto& g : r.gates) {
    nlohmann::ordered_json j;
    j["name"] = g.name;
    j["value"] = g.value;
    j["relation"] = g.relation;
    j["threshold"] = g.threshold;
    j["pass"] = g.pass;
    gates.push_back(j);
  }
  m["gates"] = gates;
  m["all_pass"] = r.all_pass();
  m["wall_clock_s"] = r.wall_clock_s;
  m["artifacts"] = artifacts;
  return m;
}

/// Writes <table>.csv for every table, optional SVG plots, and manifest.json; returns the file names.
inline std::vector<std::string> write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                                              const ExperimentResult& r, bool plot) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  for (const auto& t : r.tables) {
    std::ofstream csv(dir / (t.name + ".csv"));
    write_csv(csv, t);
    files.push_back(t.name + ".csv");
    const auto series = plot_series(t);
    if (plot && t.columns.front() == "n" && !series.empty()) {
      std::ofstream svg(dir / (t.name + ".svg"));
      write_loglog_svg(svg, t, series, r.experiment + ": " + t.name);
      files.push_back(t.name + ".svg");
    }
  }
  files.push_back("manifest.json");
  std::ofstream(dir / "manifest.json") << build_manifest(cfg, r, files).dump(2) << '\n';
  return files;
}

}  // namespace mosco
