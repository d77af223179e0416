#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mosco/hilbert.hpp"
#include "mosco/lattice.hpp"

namespace mosco {

enum class GeneratorKind { irw_k, sip_k, sip_config };

inline const char* to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::irw_k: return "irw_k";
    case GeneratorKind::sip_k: return "sip_k";
    case GeneratorKind::sip_config: return "sip_config";
  }
  return "?";
}

/**
 * Hop-rate convention for independent walkers. The default is alpha n^2 per
 * direction, giving generator limit alpha f'' per coordinate and heat-kernel
 * variance 2 alpha t. `halved` selects alpha n^2 / 2 per direction (limit
 * alpha/2 f'', variance alpha t). SIP rates are never affected.
 */
struct RateConvention {
  bool halved = false;

  double factor() const { return halved ? 0.5 : 1.0; }
  double irw_hop_rate(double alpha, int n) const { return factor() * alpha * n * static_cast<double>(n); }
  double bm_coefficient(double alpha) const { return factor() * alpha; }
  double heat_variance(double alpha, double t) const { return 2.0 * bm_coefficient(alpha) * t; }
};

struct Move {
  CoordState target;
  double rate = 0.0;
};

struct ConfigMove {
  int site = 0;
  int sigma = 0;
  double rate = 0.0;
};

/// Compressed-row generator matrix, for diagnostics on small state spaces.
struct SparseGenerator {
  std::vector<std::size_t> row_start;
  std::vector<std::size_t> columns;
  std::vector<double> values;

  std::size_t rows() const { return row_start.empty() ? 0 : row_start.size() - 1; }

  double row_sum(std::size_t r) const {
    double s = 0.0;
    for (std::size_t p = row_start[r]; p < row_start[r + 1]; ++p) s += values[p];
    return s;
  }

  double entry(std::size_t r, std::size_t c) const {
    for (std::size_t p = row_start[r]; p < row_start[r + 1]; ++p)
      if (columns[p] == c) return values[p];
    return 0.0;
  }
};

/**
 * @brief All configurations of a fixed number of particles on the window.
 *
 * States are ranked in the order of a depth-first enumeration of occupancy
 * vectors; the rank lookup is a hash on the occupancy bytes.
 */
class ConfigSpace {
 public:
  static constexpr std::size_t kMaxStates = 2'000'000;

  ConfigSpace(const LatticeWindow& w, int particles) : sites_(w.site_count()), particles_(particles) {
    if (particles < 0) throw std::invalid_argument("particle count must be nonnegative");
    if (particles > 255) throw std::length_error("particle count too large for configuration enumeration");
    double count = 1.0;  // C(N + S - 1, N)
    for (int i = 1; i <= particles; ++i) count = count * (sites_ - 1 + i) / i;
    if (count > kMaxStates) throw std::length_error("configuration space too large for enumeration");
    std::string occ(static_cast<std::size_t>(sites_), '\0');
    enumerate(occ, 0, particles);
    for (std::size_t i = 0; i < states_.size(); ++i) rank_.emplace(states_[i], i);
  }

  int particles() const { return particles_; }
  int site_count() const { return sites_; }
  std::size_t size() const { return states_.size(); }

  /// Occupancy by window offset.
  std::span<const char> occupancy(std::size_t idx) const { return {states_[idx].data(), states_[idx].size()}; }

  std::size_t index_of(const std::string& occupancy) const {
    auto it = rank_.find(occupancy);
    if (it == rank_.end()) throw std::out_of_range("configuration not in space");
    return it->second;
  }

  std::size_t index_of(const ParticleConfiguration& eta, const LatticeWindow& w) const {
    if (eta.total() != particles_) throw std::invalid_argument("configuration has the wrong particle count");
    if (!eta.fits(w)) throw std::invalid_argument("configuration leaves the window");
    std::string occ(static_cast<std::size_t>(sites_), '\0');
    for (const auto& [site, c] : eta.counts()) occ[w.offset(site)] = static_cast<char>(c);
    return index_of(occ);
  }

  ParticleConfiguration configuration(std::size_t idx, const LatticeWindow& w) const {
    ParticleConfiguration eta;
    const auto occ = occupancy(idx);
    for (int o = 0; o < sites_; ++o) eta.add(w.site_at(o), static_cast<unsigned char>(occ[o]));
    return eta;
  }

 private:
  void enumerate(std::string& occ, int site, int remaining) {
    if (site == sites_ - 1) {
      occ[site] = static_cast<char>(remaining);
      states_.push_back(occ);
      return;
    }
    for (int c = remaining; c >= 0; --c) {
      occ[site] = static_cast<char>(c);
      enumerate(occ, site + 1, remaining - c);
    }
    occ[site] = 0;
  }

  int sites_;
  int particles_;
  std::vector<std::string> states_;
  std::unordered_map<std::string, std::size_t> rank_;
};

/**
 * @brief Matrix-free CTMC generator on the truncated window.
 *
 * irw_k:      k independent walkers, hop rate per direction from RateConvention.
 * sip_k:      k SIP particles in coordinates, rate n^2 (alpha + #others at target).
 * sip_config: SIP configurations, rate n^2 eta(x) (alpha + eta(x +- 1/n)).
 *
 * Out-of-window moves are suppressed. Instances are immutable.
 */
class GeneratorAction {
 public:
  static constexpr int kMaxParticles = 8;
  static constexpr std::size_t kMaxAssembledStates = 200'000;

  static GeneratorAction irw(const LatticeWindow& w, int k, double alpha, RateConvention convention = {}) {
    GeneratorAction g(GeneratorKind::irw_k, w, k, alpha, convention);
    g.max_exit_ = g.scan_max_exit_rate();
    return g;
  }

  static GeneratorAction sip(const LatticeWindow& w, int k, double alpha) {
    GeneratorAction g(GeneratorKind::sip_k, w, k, alpha, {});
    g.max_exit_ = g.scan_max_exit_rate();
    return g;
  }

  /// Configuration SIP; a particle budget enables vector application over the enumerated space.
  static GeneratorAction sip_config(const LatticeWindow& w, double alpha, std::optional<int> particles = {}) {
    GeneratorAction g(GeneratorKind::sip_config, w, particles.value_or(0), alpha, {});
    if (particles) {
      g.space_ = std::make_shared<const ConfigSpace>(w, *particles);
      g.max_exit_ = g.scan_max_exit_rate();
    }
    return g;
  }

  GeneratorKind kind() const { return kind_; }
  const LatticeWindow& window() const { return window_; }
  /// Number of coordinates, or the particle budget for sip_config.
  int k() const { return k_; }
  double alpha() const { return alpha_; }
  const RateConvention& convention() const { return convention_; }
  bool coordinate_kind() const { return kind_ != GeneratorKind::sip_config; }

  const ConfigSpace& config_space() const {
    if (!space_) throw std::logic_error("configuration generator built without a particle budget");
    return *space_;
  }

  std::size_t state_count() const {
    return coordinate_kind() ? window_.state_count(k_) : config_space().size();
  }

  /// out = G f
  void apply(std::span<const double> f, std::span<double> out) const { run(f, out, 0.0, false); }

  /// out = f + G f / lambda, one uniformization step.
  void apply_step(std::span<const double> f, std::span<double> out, double inv_lambda) const {
    run(f, out, inv_lambda, true);
  }

  DiscreteVector apply(const DiscreteVector& f) const {
    if (!coordinate_kind()) throw std::invalid_argument("configuration generator has no coordinate vector form");
    if (!(f.window() == window_) || f.k() != k_) throw std::invalid_argument("vector does not match generator dimension");
    DiscreteVector out(window_, k_, f.weight(), f.alpha());
    apply(f.values(), out.values());
    return out;
  }

  /// Legal moves out of x with their rates; blocked moves are omitted.
  std::vector<Move> enumerate_moves(const CoordState& x) const {
    require_coordinate();
    if (x.k() != k_) throw std::invalid_argument("state has the wrong number of coordinates");
    for (int i = 0; i < x.k(); ++i)
      if (!window_.contains(x.sites[i])) throw OutOfWindow(i, x.sites[i]);
    std::vector<Move> moves;
    for (int i = 0; i < k_; ++i)
      for (int sigma : {-1, 1}) {
        auto target = apply_move(window_, x, i, sigma);
        if (!target) continue;
        moves.push_back({std::move(*target), coordinate_rate(x.sites, i, x.sites[i] + sigma)});
      }
    return moves;
  }

  /// Configuration moves (site, sigma, rate) with rate n^2 eta(x) (alpha + eta(x + sigma)).
  std::vector<ConfigMove> build_config_rates(const ParticleConfiguration& eta) const {
    if (kind_ != GeneratorKind::sip_config) throw std::logic_error("configuration rates need a sip_config generator");
    if (!eta.fits(window_)) throw std::invalid_argument("configuration leaves the window");
    const double n2 = scale2();
    std::vector<ConfigMove> moves;
    for (const auto& [site, count] : eta.counts())
      for (int sigma : {-1, 1}) {
        const int target = site + sigma;
        if (!window_.contains(target)) continue;
        moves.push_back({site, sigma, n2 * count * (alpha_ + eta[target])});
      }
    return moves;
  }

  double exit_rate(const CoordState& x) const {
    double s = 0.0;
    for (const auto& m : enumerate_moves(x)) s += m.rate;
    return s;
  }

  /// Largest total exit rate over all window states (uniformization rate).
  double max_exit_rate() const {
    if (!max_exit_) throw std::logic_error("configuration generator built without a particle budget");
    return *max_exit_;
  }

  /// Explicit rate matrix in CSR form, rows built from the move lists; up to kMaxAssembledStates states.
  SparseGenerator assemble() const {
    const std::size_t count = state_count();
    if (count > kMaxAssembledStates) throw std::invalid_argument("state space too large to assemble");
    SparseGenerator m;
    m.row_start.push_back(0);
    std::map<std::size_t, double> row;
    for (std::size_t i = 0; i < count; ++i) {
      row.clear();
      double exit = 0.0;
      if (coordinate_kind()) {
        for (const auto& mv : enumerate_moves(state_unindex(window_, k_, i))) {
          row[state_index(window_, mv.target)] += mv.rate;
          exit += mv.rate;
        }
      } else {
        const auto eta = space_->configuration(i, window_);
        for (const auto& mv : build_config_rates(eta)) {
          auto next = eta;
          next.move(mv.site, mv.site + mv.sigma);
          row[space_->index_of(next, window_)] += mv.rate;
          exit += mv.rate;
        }
      }
      row[i] -= exit;
      for (const auto& [c, v] : row) {
        m.columns.push_back(c);
        m.values.push_back(v);
      }
      m.row_start.push_back(m.columns.size());
    }
    return m;
  }

 private:
  GeneratorAction(GeneratorKind kind, const LatticeWindow& w, int k, double alpha, RateConvention convention)
      : kind_(kind), window_(w), k_(k), alpha_(alpha), convention_(convention) {
    if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
    if (kind != GeneratorKind::sip_config && (k < 1 || k > kMaxParticles))
      throw std::invalid_argument("k must be in [1, " + std::to_string(kMaxParticles) + "]");
  }

  double scan_max_exit_rate() const {
    double best = 0.0;
    if (coordinate_kind()) {
      const int s = window_.site_count();
      StateOdometer odo(s, k_);
      const std::size_t count = state_count();
      std::array<int, kMaxParticles> c{};
      for (std::size_t idx = 0; idx < count; ++idx, odo.advance()) {
        std::copy(odo.offsets().begin(), odo.offsets().end(), c.begin());
        double r = 0.0;
        for (int i = 0; i < k_; ++i) {
          if (c[i] > 0) r += offset_rate(c, i, c[i] - 1);
          if (c[i] < s - 1) r += offset_rate(c, i, c[i] + 1);
        }
        best = std::max(best, r);
      }
    } else {
      const auto& space = config_space();
      for (std::size_t idx = 0; idx < space.size(); ++idx) best = std::max(best, config_exit_rate(space.occupancy(idx)));
    }
    return best;
  }

  void require_coordinate() const {
    if (!coordinate_kind()) throw std::logic_error("coordinate operation on a configuration generator");
  }

  double scale2() const { return static_cast<double>(window_.scale()) * window_.scale(); }

  double coordinate_rate(const std::vector<int>& sites, int i, int target) const {
    if (kind_ == GeneratorKind::irw_k) return convention_.irw_hop_rate(alpha_, window_.scale());
    int others = 0;
    for (int j = 0; j < k_; ++j) others += (j != i && sites[j] == target);
    return scale2() * (alpha_ + others);
  }

  double offset_rate(const std::array<int, kMaxParticles>& c, int i, int target) const {
    if (kind_ == GeneratorKind::irw_k) return convention_.irw_hop_rate(alpha_, window_.scale());
    int others = 0;
    for (int j = 0; j < k_; ++j) others += (j != i && c[j] == target);
    return scale2() * (alpha_ + others);
  }

  double config_exit_rate(std::span<const char> occ) const {
    const int s = static_cast<int>(occ.size());
    double r = 0.0;
    for (int o = 0; o < s; ++o) {
      const int here = static_cast<unsigned char>(occ[o]);
      if (here == 0) continue;
      if (o > 0) r += here * (alpha_ + static_cast<unsigned char>(occ[o - 1]));
      if (o < s - 1) r += here * (alpha_ + static_cast<unsigned char>(occ[o + 1]));
    }
    return scale2() * r;
  }

  void run(std::span<const double> f, std::span<double> out, double inv_lambda, bool step) const {
    const std::size_t count = state_count();
    if (f.size() != count || out.size() != count) throw std::invalid_argument("vector does not match generator dimension");
    if (coordinate_kind())
      run_coordinates(f, out, inv_lambda, step);
    else
      run_configurations(f, out, inv_lambda, step);
  }

  void run_coordinates(std::span<const double> f, std::span<double> out, double inv_lambda, bool step) const {
    const int s = window_.site_count();
    const int k = k_;
    std::array<std::size_t, kMaxParticles> stride{};
    stride[k - 1] = 1;
    for (int i = k - 2; i >= 0; --i) stride[i] = stride[i + 1] * static_cast<std::size_t>(s);
    std::array<int, kMaxParticles> c{};
    const bool sip = kind_ == GeneratorKind::sip_k;
    const double n2 = scale2();
    const double walk = sip ? n2 * alpha_ : convention_.irw_hop_rate(alpha_, window_.scale());
    const std::size_t count = f.size();
    for (std::size_t idx = 0; idx < count; ++idx) {
      const double fx = f[idx];
      double acc = 0.0;
      for (int i = 0; i < k; ++i) {
        const int ci = c[i];
        if (ci > 0) {
          double r = walk;
          if (sip) {
            int others = 0;
            for (int j = 0; j < k; ++j) others += (j != i && c[j] == ci - 1);
            r += n2 * others;
          }
          acc += r * (f[idx - stride[i]] - fx);
        }
        if (ci < s - 1) {
          double r = walk;
          if (sip) {
            int others = 0;
            for (int j = 0; j < k; ++j) others += (j != i && c[j] == ci + 1);
            r += n2 * others;
          }
          acc += r * (f[idx + stride[i]] - fx);
        }
      }
      out[idx] = step ? fx + acc * inv_lambda : acc;
      for (int d = k - 1; d >= 0; --d) {
        if (++c[d] < s) break;
        c[d] = 0;
      }
    }
  }

  void run_configurations(std::span<const double> f, std::span<double> out, double inv_lambda, bool step) const {
    const auto& space = config_space();
    const int s = space.site_count();
    const double n2 = scale2();
    std::string occ;
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
      const auto from = space.occupancy(idx);
      occ.assign(from.begin(), from.end());
      const double fx = f[idx];
      double acc = 0.0;
      for (int o = 0; o < s; ++o) {
        const int here = static_cast<unsigned char>(occ[o]);
        if (here == 0) continue;
        for (int sigma : {-1, 1}) {
          const int t = o + sigma;
          if (t < 0 || t >= s) continue;
          const int there = static_cast<unsigned char>(occ[t]);
          const double rate = n2 * here * (alpha_ + there);
          --occ[o];
          ++occ[t];
          acc += rate * (f[space.index_of(occ)] - fx);
          ++occ[o];
          --occ[t];
        }
      }
      out[idx] = step ? fx + acc * inv_lambda : acc;
    }
  }

  GeneratorKind kind_;
  LatticeWindow window_;
  int k_;
  double alpha_;
  RateConvention convention_;
  std::shared_ptr<const ConfigSpace> space_;
  std::optional<double> max_exit_;
};

}  // namespace mosco
