#pragma once

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "mosco/lattice.hpp"
#include "mosco/smoothfn.hpp"

namespace mosco {

/// Gamma(alpha + m) / Gamma(alpha) as a product of m factors.
inline double rising_factorial(double alpha, int m) {
  double r = 1.0;
  for (int i = 0; i < m; ++i) r *= alpha + i;
  return r;
}

/// Single-site duality polynomial 1{m <= n} n!/(n-m)! Gamma(alpha)/Gamma(alpha+m).
inline double d_single(int m, int n, double alpha) {
  if (m < 0 || n < 0) throw std::invalid_argument("occupations must be nonnegative");
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  if (m > n) return 0.0;
  if (m > 150) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(n - m + 1.0) + std::lgamma(alpha) - std::lgamma(alpha + m));
  }
  double r = 1.0;
  for (int i = 0; i < m; ++i) r *= (n - i) / (alpha + i);
  return r;
}

/// D(x, eta) = prod_y d(xi(x)(y), eta(y)); sites with xi(y) = 0 contribute 1.
inline double D_of(const DualityConfig& xi, const ParticleConfiguration& eta, double alpha) {
  double r = 1.0;
  for (const auto& [site, m] : xi.counts()) {
    r *= d_single(m, eta[site], alpha);
    if (r == 0.0) break;
  }
  return r;
}

/**
 * Reversible weight nu(x) = prod_y Gamma(alpha + xi(x)(y)) / Gamma(alpha) for
 * k-particle SIP coordinates. Unnormalized: it is a weight, not a probability.
 */
class NuTable {
 public:
  NuTable(double alpha, int k) : alpha_(alpha), rising_(static_cast<std::size_t>(k) + 1) {
    if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
    for (int m = 0; m <= k; ++m) rising_[m] = rising_factorial(alpha, m);
  }

  double alpha() const { return alpha_; }

  double operator()(std::span<const int> sites) const {
    double w = 1.0;
    const std::size_t k = sites.size();
    for (std::size_t i = 0; i < k; ++i) {
      bool first = true;
      for (std::size_t j = 0; j < i; ++j)
        if (sites[j] == sites[i]) {
          first = false;
          break;
        }
      if (!first) continue;
      std::size_t m = 1;
      for (std::size_t j = i + 1; j < k; ++j) m += sites[j] == sites[i];
      w *= m < rising_.size() ? rising_[m] : rising_factorial(alpha_, static_cast<int>(m));
    }
    return w;
  }

 private:
  double alpha_;
  std::vector<double> rising_;
};

inline double nu_weight(const CoordState& x, double alpha) {
  return NuTable(alpha, x.k())(x.sites);
}

inline double log_nu_weight(const CoordState& x, double alpha) {
  double s = 0.0;
  const auto xi = xi_of(x);
  for (const auto& [site, m] : xi.counts()) s += std::lgamma(alpha + m) - std::lgamma(alpha);
  return s;
}

/// Number of particles other than i sitting at the given site.
inline int others_at(const CoordState& x, int i, int site) {
  int c = 0;
  for (int j = 0; j < x.k(); ++j) c += (j != i && x.sites[j] == site);
  return c;
}

/**
 * |log(nu(x) rate(x -> x')) - log(nu(x') rate(x' -> x))| for the SIP move of
 * particle i by sigma. Zero means the edge is in exact detailed balance.
 */
inline double detailed_balance_residual(const LatticeWindow& w, const CoordState& x, int i, int sigma,
                                        double alpha) {
  const auto moved = apply_move(w, x, i, sigma);
  if (!moved) throw std::invalid_argument("detailed balance residual requested for a blocked move");
  const double forward = alpha + others_at(x, i, x.sites[i] + sigma);
  const double backward = alpha + others_at(*moved, i, x.sites[i]);
  const double lhs = std::log(nu_weight(x, alpha)) + std::log(forward);
  const double rhs = std::log(nu_weight(*moved, alpha)) + std::log(backward);
  return std::abs(lhs - rhs);
}

/**
 * @brief Product negative-binomial initial measure.
 *
 * Site occupation at position x is NB(shape alpha, success theta(x)) with
 * theta = rho/(1 + rho), rho the dual-density profile; the site mean is
 * alpha * rho(x) and E[d(m, N)] = rho(x)^m.
 */
class NBProfile {
 public:
  NBProfile(SmoothFunction rho_tilde, double alpha) : rho_(std::move(rho_tilde)), alpha_(alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  }

  const SmoothFunction& rho_tilde() const { return rho_; }
  double alpha() const { return alpha_; }

  double density(double x) const {
    const double r = rho_(x);
    if (r < 0.0 || !std::isfinite(r)) throw std::domain_error("dual-density profile must be finite and nonnegative");
    return r;
  }

  double theta(double x) const {
    const double r = density(x);
    const double th = r / (1.0 + r);
    if (!(th < 1.0)) throw std::domain_error("negative binomial parameter theta must be < 1");
    return th;
  }

  double mean_occupation(double x) const { return alpha_ * density(x); }

 private:
  SmoothFunction rho_;
  double alpha_;
};

/// Closed form E[d(m, N)] = rho(x)^m under the NB site law.
inline double nb_moment(int m, double x, const NBProfile& profile) {
  if (m < 0) throw std::invalid_argument("moment order must be nonnegative");
  profile.theta(x);
  return m == 0 ? 1.0 : std::pow(profile.density(x), m);
}

/// E[d(m, N)] by summing d(m, n) P(N = n) until the tail is below 1e-14.
inline double nb_moment_bruteforce(int m, double x, const NBProfile& profile) {
  if (m < 0) throw std::invalid_argument("moment order must be nonnegative");
  const double theta = profile.theta(x);
  const double alpha = profile.alpha();
  double pmf = std::pow(1.0 - theta, alpha);
  double sum = 0.0;
  for (int n = 0; n < 10'000'000; ++n) {
    const double term = d_single(m, n, alpha) * pmf;
    sum += term;
    if (n >= m) {
      const double ratio = theta * (alpha + n) / (n + 1.0 - m);
      const double bound = std::max(ratio, theta);
      if (bound < 1.0 && term * bound / (1.0 - bound) < 1e-14) return sum;
    }
    pmf *= theta * (alpha + n) / (n + 1.0);
  }
  throw std::runtime_error("negative binomial moment sum did not converge");
}

/// Exact integral of D(xi, .) against the product NB measure: prod_y rho(y)^{xi(y)}.
inline double factorized_D_moment(const DualityConfig& xi, const NBProfile& profile, const LatticeWindow& w) {
  double r = 1.0;
  for (const auto& [site, m] : xi.counts()) r *= nb_moment(m, w.position(site), profile);
  return r;
}

/// Draws eta from the product NB measure on the window (gamma-Poisson mixture).
template <class Rng>
ParticleConfiguration sample_nb_configuration(const NBProfile& profile, const LatticeWindow& w, Rng& rng) {
  ParticleConfiguration eta;
  for (int site = w.min_site(); site <= w.max_site(); ++site) {
    const double rho = profile.density(w.position(site));
    if (rho == 0.0) continue;
    std::gamma_distribution<double> intensity(profile.alpha(), rho);
    const double lambda = intensity(rng);
    if (!(lambda > 0.0)) continue;
    std::poisson_distribution<int> count(lambda);
    eta.add(site, count(rng));
  }
  return eta;
}

}  // namespace mosco
