#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mosco {

/// A coordinate lies outside the truncated window.
class OutOfWindow : public std::out_of_range {
 public:
  OutOfWindow(int coordinate, int site)
      : std::out_of_range("coordinate " + std::to_string(coordinate) + " at site " +
                          std::to_string(site) + " is outside the window"),
        coordinate_(coordinate),
        site_(site) {}

  int coordinate() const { return coordinate_; }
  int site() const { return site_; }

 private:
  int coordinate_;
  int site_;
};

/**
 * @brief Rescaled lattice (1/n)Z truncated to [-a, a].
 *
 * Sites are integer indices i in [-h, h] with h = ceil(a n); the position of
 * site i is i/n. Moves that would leave the window are suppressed
 * (reflecting truncation).
 */
class LatticeWindow {
 public:
  LatticeWindow(int n, double a) : n_(n), a_(a) {
    if (n <= 0) throw std::invalid_argument("lattice scale n must be positive");
    if (!(a > 0) || !std::isfinite(a)) throw std::invalid_argument("window half-width must be positive");
    const double an = a * n;
    // a is usually a short decimal; absorb representation error before ceil
    const double h = std::ceil(an - 1e-9 * std::max(1.0, an));
    if (h > 1e8) throw std::invalid_argument("window too large");
    h_ = static_cast<int>(h);
  }

  int scale() const { return n_; }
  double half_width() const { return a_; }
  int max_site() const { return h_; }
  int min_site() const { return -h_; }
  int site_count() const { return 2 * h_ + 1; }

  double position(int site) const { return static_cast<double>(site) / n_; }
  bool contains(int site) const { return site >= -h_ && site <= h_; }

  /// Zero-based offset of a site, leftmost site -> 0.
  int offset(int site) const { return site + h_; }
  int site_at(int offset) const { return offset - h_; }

  /// |sites|^k, rejecting counts that do not fit in memory-addressable range.
  std::size_t state_count(int k) const {
    if (k < 1) throw std::invalid_argument("k must be at least 1");
    std::size_t count = 1;
    const auto s = static_cast<std::size_t>(site_count());
    for (int i = 0; i < k; ++i) {
      if (count > std::numeric_limits<std::size_t>::max() / s)
        throw std::overflow_error("state space too large");
      count *= s;
    }
    return count;
  }

  std::vector<double> positions() const {
    std::vector<double> out(static_cast<std::size_t>(site_count()));
    for (int o = 0; o < site_count(); ++o) out[o] = position(site_at(o));
    return out;
  }

  friend bool operator==(const LatticeWindow& l, const LatticeWindow& r) {
    return l.n_ == r.n_ && l.h_ == r.h_;
  }

 private:
  int n_;
  double a_;
  int h_ = 0;
};

/// k particle coordinates, each a site index.
struct CoordState {
  std::vector<int> sites;

  CoordState() = default;
  explicit CoordState(std::vector<int> s) : sites(std::move(s)) {}
  CoordState(std::initializer_list<int> s) : sites(s) {}

  int k() const { return static_cast<int>(sites.size()); }
  friend bool operator==(const CoordState&, const CoordState&) = default;
};

/// Mixed-radix index; the last coordinate is the fastest-varying digit.
inline std::uint64_t state_index(const LatticeWindow& w, const CoordState& x) {
  if (x.k() < 1) throw std::invalid_argument("state must have at least one coordinate");
  const auto s = static_cast<std::uint64_t>(w.site_count());
  std::uint64_t idx = 0;
  for (int i = 0; i < x.k(); ++i) {
    const int site = x.sites[i];
    if (!w.contains(site)) throw OutOfWindow(i, site);
    idx = idx * s + static_cast<std::uint64_t>(w.offset(site));
  }
  return idx;
}

inline CoordState state_unindex(const LatticeWindow& w, int k, std::uint64_t idx) {
  const auto s = static_cast<std::uint64_t>(w.site_count());
  if (idx >= w.state_count(k)) throw std::out_of_range("state index out of range");
  CoordState x;
  x.sites.resize(static_cast<std::size_t>(k));
  for (int i = k - 1; i >= 0; --i) {
    x.sites[i] = w.site_at(static_cast<int>(idx % s));
    idx /= s;
  }
  return x;
}

/// Walks all |sites|^k states in state_index order, tracking window offsets.
class StateOdometer {
 public:
  StateOdometer(int site_count, int k) : site_count_(site_count), offsets_(static_cast<std::size_t>(k), 0) {}

  std::span<const int> offsets() const { return offsets_; }

  void advance() {
    for (std::size_t d = offsets_.size(); d-- > 0;) {
      if (++offsets_[d] < site_count_) return;
      offsets_[d] = 0;
    }
  }

 private:
  int site_count_;
  std::vector<int> offsets_;
};

/// x with particle i moved by sigma sites; nullopt if the target leaves the window.
inline std::optional<CoordState> apply_move(const LatticeWindow& w, const CoordState& x, int particle,
                                            int sigma) {
  if (particle < 0 || particle >= x.k()) throw std::out_of_range("particle index out of range");
  if (sigma != 1 && sigma != -1) throw std::invalid_argument("sigma must be +1 or -1");
  const int target = x.sites[particle] + sigma;
  if (!w.contains(target)) return std::nullopt;
  CoordState y = x;
  y.sites[particle] = target;
  return y;
}

/**
 * Finite occupancy field: site -> positive count. Zero entries are never
 * stored. The tag separates full configurations from dual configurations.
 */
template <class Tag>
class BasicOccupancy {
 public:
  BasicOccupancy() = default;
  BasicOccupancy(std::initializer_list<std::pair<const int, int>> init) {
    for (const auto& [site, count] : init) add(site, count);
  }

  void add(int site, int count = 1) {
    if (count < 0) throw std::invalid_argument("occupancy counts must be nonnegative");
    if (count == 0) return;
    counts_[site] += count;
    total_ += count;
  }

  /// Moves one particle; the source must be occupied.
  void move(int from, int to) {
    auto it = counts_.find(from);
    if (it == counts_.end()) throw std::invalid_argument("no particle at source site");
    if (--it->second == 0) counts_.erase(it);
    ++counts_[to];
  }

  int operator[](int site) const {
    auto it = counts_.find(site);
    return it == counts_.end() ? 0 : it->second;
  }

  int total() const { return total_; }
  bool empty() const { return total_ == 0; }
  const std::map<int, int>& counts() const { return counts_; }

  bool fits(const LatticeWindow& w) const {
    return counts_.empty() || (w.contains(counts_.begin()->first) && w.contains(counts_.rbegin()->first));
  }

  friend bool operator==(const BasicOccupancy&, const BasicOccupancy&) = default;

 private:
  std::map<int, int> counts_;
  int total_ = 0;
};

/// Particle configuration eta restricted to the window.
using ParticleConfiguration = BasicOccupancy<struct ParticleTag>;
/// Dual k-particle configuration xi(x).
using DualityConfig = BasicOccupancy<struct DualTag>;

inline DualityConfig xi_of(const CoordState& x) {
  DualityConfig xi;
  for (int site : x.sites) xi.add(site);
  return xi;
}

}  // namespace mosco
