#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mosco/lattice.hpp"
#include "mosco/operators.hpp"
#include "mosco/smoothfn.hpp"

namespace mosco {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"hilbert", "forms",     "domination",  "balance",
                                              "duality", "semigroup", "correlations"};
  return names;
}

/// Raised for malformed or out-of-schema configs; problems() lists every offending key.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid config:";
    for (const auto& x : p) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> problems_;
};

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i)
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  return out;
}

inline double parse_double(std::string_view text) {
  const auto s = trim(text);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw std::invalid_argument("'" + s + "' is not a finite number");
  return v;
}

template <class Int>
Int parse_integer(std::string_view text) {
  const auto s = trim(text);
  Int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("'" + s + "' is not an integer");
  return v;
}

inline bool parse_bool(std::string_view text) {
  const auto s = trim(text);
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw std::invalid_argument("'" + s + "' is not a boolean");
}

/// Splits on `sep` at parenthesis depth zero.
inline std::vector<std::string> split_top(std::string_view s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (depth < 0) throw std::invalid_argument("unbalanced parentheses");
    if (depth == 0 && s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  if (depth != 0) throw std::invalid_argument("unbalanced parentheses");
  out.push_back(trim(s.substr(start)));
  return out;
}

}  // namespace detail

/**
 * Parses one factor: bump(center, halfwidth, amplitude),
 * gaussian(center, sd, amplitude) or hermite(degree, center, sd).
 * The amplitude may be omitted (defaults to 1).
 */
inline SmoothFunction parse_function(std::string_view text) {
  const auto s = detail::trim(text);
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')') throw std::invalid_argument("expected name(args) in '" + s + "'");
  const auto name = detail::trim(s.substr(0, open));
  const auto args = detail::split(std::string_view(s).substr(open + 1, s.size() - open - 2), ',');
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi)
      throw std::invalid_argument(name + " takes " + std::to_string(lo) + (lo == hi ? "" : "-" + std::to_string(hi)) +
                                  " arguments");
  };
  if (name == "bump" || name == "gaussian") {
    need(2, 3);
    const double c = detail::parse_double(args[0]);
    const double w = detail::parse_double(args[1]);
    const double a = args.size() == 3 ? detail::parse_double(args[2]) : 1.0;
    if (!(w > 0)) throw std::invalid_argument(name + " width must be positive");
    return name == "bump" ? SmoothFunction::bump(c, w, a) : SmoothFunction::gaussian(c, w, a);
  }
  if (name == "hermite") {
    need(3, 3);
    const int d = detail::parse_integer<int>(args[0]);
    const double sd = detail::parse_double(args[2]);
    if (d < 0 || d > 20) throw std::invalid_argument("hermite degree must be in [0, 20]");
    if (!(sd > 0)) throw std::invalid_argument("hermite sd must be positive");
    return SmoothFunction::hermite_gaussian(d, detail::parse_double(args[1]), sd);
  }
  throw std::invalid_argument("unknown function kind '" + name + "'");
}

/**
 * Parses a tensor expression: terms joined by '+', each term an optional
 * numeric coefficient followed by '*'-joined factors; `f^m` repeats a factor
 * m times. Every term must have the same number of factors.
 */
inline TensorFunction parse_tensor(std::string_view text) {
  std::optional<TensorFunction> out;
  for (const auto& term_text : detail::split_top(text, '+')) {
    if (term_text.empty()) throw std::invalid_argument("empty term");
    double coefficient = 1.0;
    std::vector<SmoothFunction> factors;
    for (const auto& piece : detail::split_top(term_text, '*')) {
      if (piece.empty()) throw std::invalid_argument("empty factor in '" + term_text + "'");
      if (piece.find('(') == std::string::npos) {
        coefficient *= detail::parse_double(piece);
        continue;
      }
      auto base = piece;
      int power = 1;
      const auto caret = piece.rfind('^');
      if (caret != std::string::npos && caret > piece.rfind(')')) {
        base = detail::trim(std::string_view(piece).substr(0, caret));
        power = detail::parse_integer<int>(std::string_view(piece).substr(caret + 1));
        if (power < 1) throw std::invalid_argument("power must be positive");
      }
      const auto f = parse_function(base);
      for (int i = 0; i < power; ++i) factors.push_back(f);
    }
    if (factors.empty()) throw std::invalid_argument("term '" + term_text + "' has no factors");
    if (!out) out.emplace(static_cast<int>(factors.size()));
    if (static_cast<int>(factors.size()) != out->k())
      throw std::invalid_argument("terms have different numbers of factors");
    out->add_term(coefficient, std::move(factors));
  }
  return *out;
}

/// "site:count, site:count" in integer site indices.
inline ParticleConfiguration parse_occupancy(std::string_view text) {
  ParticleConfiguration eta;
  if (detail::trim(text).empty()) return eta;
  for (const auto& item : detail::split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("expected site:count, got '" + item + "'");
    const int count = detail::parse_integer<int>(std::string_view(item).substr(colon + 1));
    if (count < 0) throw std::invalid_argument("negative count");
    eta.add(detail::parse_integer<int>(std::string_view(item).substr(0, colon)), count);
  }
  return eta;
}

inline GeneratorKind parse_kind(std::string_view text) {
  const auto s = detail::trim(text);
  if (s == "irw_k") return GeneratorKind::irw_k;
  if (s == "sip_k") return GeneratorKind::sip_k;
  throw std::invalid_argument("unknown coordinate generator '" + s + "'");
}

/// One validated config. Unset optionals fall back to per-experiment defaults.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::optional<std::string> out;
  bool plot = false;

  double alpha = 1.0;
  std::vector<double> alphas;
  std::optional<int> k;
  int k_max = 4;
  std::optional<double> t;
  std::optional<double> lambda_t;
  bool rate_halved = false;
  std::optional<double> half_width;
  std::vector<GeneratorKind> kinds;

  std::vector<int> n_grid;

  std::optional<TensorFunction> observable;
  std::optional<SmoothFunction> rho;

  std::size_t replicas = 10'000;
  std::size_t seed_variations = 0;
  std::size_t edges = 10'000;
  std::size_t random_vectors = 100;
  std::size_t smooth_functions = 20;
  std::size_t nb_cases = 100;

  std::optional<ParticleConfiguration> eta0;
  std::optional<CoordState> x;

  /// [gates] thresholds as given; runners supply defaults for missing ones.
  std::map<std::string, double> gates;

  /// (section.key, raw value) in file order.
  std::vector<std::pair<std::string, std::string>> echo;

  RateConvention convention() const { return {rate_halved}; }
  double gate(const std::string& name, double fallback) const {
    auto it = gates.find(name);
    return it == gates.end() ? fallback : it->second;
  }
};

namespace detail {

struct KeySpec {
  std::string section;
  std::string key;
  std::vector<std::string> experiments;  // empty: every experiment
  void (*apply)(ExperimentConfig&, const std::string&);
};

inline std::vector<int> parse_int_list(const std::string& v) {
  std::vector<int> out;
  for (const auto& s : split(v, ',')) out.push_back(parse_integer<int>(s));
  return out;
}

inline std::vector<double> parse_double_list(const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split(v, ',')) out.push_back(parse_double(s));
  return out;
}

inline double positive(double v, const char* what) {
  if (!(v > 0)) throw std::invalid_argument(std::string(what) + " must be positive");
  return v;
}

inline std::size_t count_in(const std::string& v, std::size_t lo, std::size_t hi) {
  const auto c = parse_integer<std::size_t>(v);
  if (c < lo || c > hi)
    throw std::invalid_argument("must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return c;
}

inline void gate(ExperimentConfig& c, const std::string& key, const std::string& v) { c.gates[key] = parse_double(v); }

#define MOSCO_GATE(name) [](ExperimentConfig& c, const std::string& v) { gate(c, name, v); }

inline const std::vector<KeySpec>& schema() {
  using C = ExperimentConfig;
  using S = const std::string&;
  static const std::vector<KeySpec> table{
      {"run", "experiment", {}, [](C& c, S v) { c.experiment = trim(v); }},
      {"run", "seed", {}, [](C& c, S v) { c.seed = parse_integer<std::uint64_t>(v); }},
      {"run", "out", {}, [](C& c, S v) { c.out = trim(v); }},
      {"run", "plot", {}, [](C& c, S v) { c.plot = parse_bool(v); }},

      {"model", "alpha", {"hilbert", "forms", "duality", "semigroup", "correlations"},
       [](C& c, S v) { c.alpha = positive(parse_double(v), "alpha"); }},
      {"model", "alphas", {"domination", "balance"},
       [](C& c, S v) {
         c.alphas = parse_double_list(v);
         for (double a : c.alphas) positive(a, "alphas");
       }},
      {"model", "k", {"domination"},
       [](C& c, S v) {
         c.k = parse_integer<int>(v);
         if (*c.k < 1 || *c.k > 3) throw std::invalid_argument("k must be in [1, 3]");
       }},
      {"model", "k_max", {"balance"},
       [](C& c, S v) {
         c.k_max = parse_integer<int>(v);
         if (c.k_max < 1 || c.k_max > GeneratorAction::kMaxParticles)
           throw std::invalid_argument("k_max must be in [1, 8]");
       }},
      {"model", "t", {"duality", "semigroup", "correlations"},
       [](C& c, S v) {
         c.t = parse_double(v);
         if (*c.t < 0 || *c.t > 100) throw std::invalid_argument("t must be in [0, 100]");
       }},
      {"model", "lambda_t", {"duality"}, [](C& c, S v) { c.lambda_t = positive(parse_double(v), "lambda_t"); }},
      {"model", "rate_halved", {"forms", "semigroup"}, [](C& c, S v) { c.rate_halved = parse_bool(v); }},
      {"model", "half_width", {}, [](C& c, S v) { c.half_width = positive(parse_double(v), "half_width"); }},
      {"model", "kinds", {"semigroup"},
       [](C& c, S v) {
         c.kinds.clear();
         for (const auto& s : split(v, ',')) c.kinds.push_back(parse_kind(s));
       }},

      {"grid", "n", {},
       [](C& c, S v) {
         c.n_grid = parse_int_list(v);
         for (int n : c.n_grid)
           if (n < 1 || n > 4096) throw std::invalid_argument("grid entries must be in [1, 4096]");
       }},

      {"observable", "F", {"hilbert", "forms", "semigroup", "correlations"},
       [](C& c, S v) { c.observable = parse_tensor(v); }},
      {"profile", "rho", {"duality", "correlations"},
       [](C& c, S v) {
         c.rho = parse_function(v);
         if (c.rho->kind() == FunctionKind::hermite_gaussian)
           throw std::invalid_argument("profile must be nonnegative (bump or gaussian)");
         if (c.rho->amplitude() < 0) throw std::invalid_argument("profile amplitude must be nonnegative");
       }},

      {"monte_carlo", "replicas", {"duality"}, [](C& c, S v) { c.replicas = count_in(v, 2, 10'000'000); }},
      {"monte_carlo", "seed_variations", {"duality"},
       [](C& c, S v) { c.seed_variations = count_in(v, 0, 1000); }},
      {"monte_carlo", "edges", {"balance"}, [](C& c, S v) { c.edges = count_in(v, 1, 100'000'000); }},
      {"monte_carlo", "random_vectors", {"domination"},
       [](C& c, S v) { c.random_vectors = count_in(v, 0, 1'000'000); }},
      {"monte_carlo", "smooth_functions", {"domination"},
       [](C& c, S v) { c.smooth_functions = count_in(v, 0, 1'000'000); }},
      {"monte_carlo", "nb_cases", {"duality"}, [](C& c, S v) { c.nb_cases = count_in(v, 0, 1'000'000); }},

      {"duality", "eta0", {"duality"}, [](C& c, S v) { c.eta0 = parse_occupancy(v); }},
      {"duality", "x", {"duality"},
       [](C& c, S v) {
         c.x = CoordState(parse_int_list(v));
         if (c.x->k() < 1 || c.x->k() > 4) throw std::invalid_argument("x must have 1 to 4 coordinates");
       }},

      {"gates", "max_runtime_s", {}, MOSCO_GATE("max_runtime_s")},
      {"gates", "max_final_error", {"hilbert", "semigroup"}, MOSCO_GATE("max_final_error")},
      {"gates", "min_order", {"hilbert"}, MOSCO_GATE("min_order")},
      {"gates", "max_rel_err", {"forms", "correlations"}, MOSCO_GATE("max_rel_err")},
      {"gates", "min_gap_order", {"forms"}, MOSCO_GATE("min_gap_order")},
      {"gates", "relative_tolerance", {"domination"}, MOSCO_GATE("relative_tolerance")},
      {"gates", "max_residual", {"balance"}, MOSCO_GATE("max_residual")},
      {"gates", "sigma", {"duality"}, MOSCO_GATE("sigma")},
      {"gates", "variation_sigma", {"duality"}, MOSCO_GATE("variation_sigma")},
      {"gates", "nb_tolerance", {"duality"}, MOSCO_GATE("nb_tolerance")},
      {"gates", "require_decreasing", {"hilbert", "forms", "semigroup", "correlations"},
       [](C& c, S v) { c.gates["require_decreasing"] = parse_bool(v) ? 1.0 : 0.0; }},
  };
  return table;
}

#undef MOSCO_GATE

inline bool applies(const KeySpec& spec, const std::string& experiment) {
  return spec.experiments.empty() ||
         std::find(spec.experiments.begin(), spec.experiments.end(), experiment) != spec.experiments.end();
}

}  // namespace detail

/// Schema rows as (section, key, experiments or "all"), for documentation and tooling.
inline std::vector<std::array<std::string, 3>> config_schema() {
  std::vector<std::array<std::string, 3>> out;
  for (const auto& s : detail::schema()) {
    std::string ex;
    for (const auto& e : s.experiments) ex += (ex.empty() ? "" : ",") + e;
    out.push_back({s.section, s.key, ex.empty() ? "all" : ex});
  }
  return out;
}

/**
 * Reads and validates an INI config. `experiment` (from the command line)
 * selects the schema; a [run] experiment entry must agree with it.
 */
inline ExperimentConfig parse_config(std::istream& in, const std::string& experiment) {
  if (std::find(experiment_names().begin(), experiment_names().end(), experiment) == experiment_names().end())
    throw ConfigError({"unknown experiment '" + experiment + "'"});
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
  }
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  std::vector<std::string> problems;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) {
      problems.push_back("key '" + section + "' outside any section");
      continue;
    }
    for (const auto& [key, node] : body) {
      const auto name = "[" + section + "] " + key;
      const auto& table = detail::schema();
      auto it = std::find_if(table.begin(), table.end(),
                             [&](const detail::KeySpec& s) { return s.section == section && s.key == key; });
      if (it == table.end()) {
        problems.push_back(name + ": unknown key");
        continue;
      }
      if (!detail::applies(*it, experiment)) {
        problems.push_back(name + ": not used by experiment '" + experiment + "'");
        continue;
      }
      const auto value = node.data();
      try {
        it->apply(cfg, value);
        cfg.echo.emplace_back(section + "." + key, value);
      } catch (const std::exception& e) {
        problems.push_back(name + ": " + e.what());
      }
    }
  }
  if (cfg.experiment != experiment)
    problems.push_back("[run] experiment: config is for '" + cfg.experiment + "', not '" + experiment + "'");
  if (problems.empty()) {
    // cross-key requirements
    auto require = [&](bool ok, const std::string& msg) {
      if (!ok) problems.push_back(msg);
    };
    const auto& e = experiment;
    if (e == "hilbert" || e == "forms" || e == "semigroup" || e == "correlations")
      require(cfg.observable.has_value(), "[observable] F: required");
    if (e != "balance" && e != "domination" && e != "duality") require(!cfg.n_grid.empty(), "[grid] n: required");
    if (e == "semigroup" || e == "correlations") require(cfg.t.has_value(), "[model] t: required");
    if (e == "correlations") require(cfg.rho.has_value(), "[profile] rho: required");
    if (e == "duality") {
      require(cfg.eta0.has_value(), "[duality] eta0: required");
      require(cfg.x.has_value(), "[duality] x: required");
      require(cfg.t.has_value() != cfg.lambda_t.has_value(), "[model] exactly one of t and lambda_t is required");
      require(cfg.n_grid.size() == 1, "[grid] n: duality takes a single lattice scale");
      require(cfg.half_width.has_value(), "[model] half_width: required");
    }
    if (e == "correlations" && cfg.observable && cfg.observable->k() > 3)
      problems.push_back("[observable] F: correlations support k <= 3");
  }
  if (!problems.empty()) throw ConfigError(problems);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, const std::string& experiment) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
  return parse_config(in, experiment);
}

}  // namespace mosco
