#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosco/quadrature.hpp"

namespace mosco {

enum class FunctionKind { bump, gaussian, hermite_gaussian };

/// Relative level below which Schwartz-class functions are treated as zero.
inline constexpr double kTruncationLevel = 1e-14;

/**
 * @brief A one-dimensional test function with closed-form derivative.
 *
 * - bump(c, w, A):       A exp(1 - 1/(1-u^2)), u = (x-c)/w, zero for |u| >= 1
 * - gaussian(c, s, A):   A exp(-(x-c)^2 / (2 s^2))
 * - hermite_gaussian(d, c, s): He_d(u) exp(-u^2/2), u = (x-c)/s, He_d the
 *   probabilists' Hermite polynomial
 */
class SmoothFunction {
 public:
  static SmoothFunction bump(double center, double halfwidth, double amplitude = 1.0) {
    if (!(halfwidth > 0)) throw std::invalid_argument("bump halfwidth must be positive");
    SmoothFunction f(FunctionKind::bump, center, halfwidth, amplitude, 0);
    f.effective_radius_ = halfwidth;
    return f;
  }

  static SmoothFunction gaussian(double center, double sd, double amplitude = 1.0) {
    if (!(sd > 0)) throw std::invalid_argument("gaussian sd must be positive");
    SmoothFunction f(FunctionKind::gaussian, center, sd, amplitude, 0);
    f.effective_radius_ = sd * std::sqrt(-2.0 * std::log(kTruncationLevel));
    return f;
  }

  static SmoothFunction hermite_gaussian(int degree, double center, double sd) {
    if (degree < 0 || degree > 40) throw std::invalid_argument("hermite degree must be in [0, 40]");
    if (!(sd > 0)) throw std::invalid_argument("hermite_gaussian sd must be positive");
    SmoothFunction f(FunctionKind::hermite_gaussian, center, sd, 1.0, degree);
    f.effective_radius_ = sd * hermite_effective_u(degree);
    return f;
  }

  FunctionKind kind() const { return kind_; }
  double center() const { return center_; }
  /// halfwidth for bumps, sd otherwise
  double width() const { return width_; }
  double amplitude() const { return amplitude_; }
  int degree() const { return degree_; }
  bool compact() const { return kind_ == FunctionKind::bump; }

  double support_radius() const {
    return compact() ? width_ : std::numeric_limits<double>::infinity();
  }

  /// Distance from the center beyond which |f| stays below kTruncationLevel times its peak.
  double effective_radius() const { return effective_radius_; }
  Interval effective_support() const { return {center_ - effective_radius_, center_ + effective_radius_}; }

  double operator()(double x) const { return eval(x); }

  double eval(double x) const {
    const double u = (x - center_) / width_;
    switch (kind_) {
      case FunctionKind::bump: {
        if (std::abs(u) >= 1.0) return 0.0;
        return amplitude_ * std::exp(1.0 - 1.0 / (1.0 - u * u));
      }
      case FunctionKind::gaussian:
        return amplitude_ * std::exp(-0.5 * u * u);
      case FunctionKind::hermite_gaussian:
        return hermite(degree_, u) * std::exp(-0.5 * u * u);
    }
    return 0.0;
  }

  double deriv(double x) const {
    const double u = (x - center_) / width_;
    switch (kind_) {
      case FunctionKind::bump: {
        if (std::abs(u) >= 1.0) return 0.0;
        const double q = 1.0 - u * u;
        return eval(x) * (-2.0 * u / (q * q)) / width_;
      }
      case FunctionKind::gaussian:
        return -eval(x) * u / width_;
      case FunctionKind::hermite_gaussian:
        // (He_d e^{-u^2/2})' = -He_{d+1} e^{-u^2/2}
        return -hermite(degree_ + 1, u) * std::exp(-0.5 * u * u) / width_;
    }
    return 0.0;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case FunctionKind::bump:
        os << "bump(" << center_ << ", " << width_ << ", " << amplitude_ << ")";
        break;
      case FunctionKind::gaussian:
        os << "gaussian(" << center_ << ", " << width_ << ", " << amplitude_ << ")";
        break;
      case FunctionKind::hermite_gaussian:
        os << "hermite(" << degree_ << ", " << center_ << ", " << width_ << ")";
        break;
    }
    return os.str();
  }

  static double hermite(int degree, double u) {
    double h0 = 1.0;
    if (degree == 0) return h0;
    double h1 = u;
    for (int d = 1; d < degree; ++d) {
      const double h2 = u * h1 - d * h0;
      h0 = h1;
      h1 = h2;
    }
    return h1;
  }

 private:
  SmoothFunction(FunctionKind kind, double center, double width, double amplitude, int degree)
      : kind_(kind), center_(center), width_(width), amplitude_(amplitude), degree_(degree) {}

  static double hermite_effective_u(int degree) {
    auto g = [degree](double u) { return std::abs(hermite(degree, u) * std::exp(-0.5 * u * u)); };
    double peak = 0.0;
    for (double u = 0.0; u <= std::sqrt(4.0 * degree + 2.0) + 3.0; u += 1e-3) peak = std::max(peak, g(u));
    double radius = 0.0;
    for (double u = 0.0; u <= 80.0; u += 0.01)
      if (g(u) >= kTruncationLevel * peak) radius = u + 0.01;
    return radius;
  }

  FunctionKind kind_;
  double center_;
  double width_;
  double amplitude_;
  int degree_;
  double effective_radius_ = 0.0;
};

/// Anything evaluable on the real line with a known effective support.
template <class F>
concept Factor1D = requires(const F& f, double x) {
  { f(x) } -> std::convertible_to<double>;
  { f.effective_support() } -> std::convertible_to<Interval>;
};

template <class F>
concept DifferentiableFactor = Factor1D<F> && requires(const F& f, double x) {
  { f.deriv(x) } -> std::convertible_to<double>;
};

template <class Factor>
struct TensorTerm {
  double coefficient = 1.0;
  std::vector<Factor> factors;
};

/**
 * @brief Finite linear combination of k-fold tensor products.
 *
 * Evaluation at z in R^k is sum_t c_t prod_j f_{t,j}(z_j).
 */
template <Factor1D Factor>
class BasicTensor {
 public:
  explicit BasicTensor(int k) : k_(k) {
    if (k < 1) throw std::invalid_argument("tensor order must be at least 1");
  }

  static BasicTensor pure(std::vector<Factor> factors) {
    BasicTensor t(static_cast<int>(factors.size()));
    t.add_term(1.0, std::move(factors));
    return t;
  }

  BasicTensor& add_term(double coefficient, std::vector<Factor> factors) {
    if (static_cast<int>(factors.size()) != k_)
      throw std::invalid_argument("tensor term has " + std::to_string(factors.size()) + " factors, expected " +
                                  std::to_string(k_));
    terms_.push_back({coefficient, std::move(factors)});
    return *this;
  }

  int k() const { return k_; }
  const std::vector<TensorTerm<Factor>>& terms() const { return terms_; }

  double operator()(std::span<const double> z) const {
    if (static_cast<int>(z.size()) != k_) throw std::invalid_argument("point dimension mismatch");
    double s = 0.0;
    for (const auto& term : terms_) {
      double p = term.coefficient;
      for (int j = 0; j < k_ && p != 0.0; ++j) p *= term.factors[j](z[j]);
      s += p;
    }
    return s;
  }

  double partial(int i, std::span<const double> z) const
    requires DifferentiableFactor<Factor>
  {
    if (static_cast<int>(z.size()) != k_) throw std::invalid_argument("point dimension mismatch");
    double s = 0.0;
    for (const auto& term : terms_) {
      double p = term.coefficient;
      for (int j = 0; j < k_; ++j) p *= (j == i) ? term.factors[j].deriv(z[j]) : term.factors[j](z[j]);
      s += p;
    }
    return s;
  }

  /// Per-coordinate hull of the factors' effective supports.
  Box effective_box() const {
    Box box(static_cast<std::size_t>(k_), Interval{std::numeric_limits<double>::infinity(),
                                                   -std::numeric_limits<double>::infinity()});
    for (const auto& term : terms_)
      for (int j = 0; j < k_; ++j) {
        const Interval s = term.factors[j].effective_support();
        box[j].lo = std::min(box[j].lo, s.lo);
        box[j].hi = std::max(box[j].hi, s.hi);
      }
    for (auto& iv : box)
      if (iv.lo > iv.hi) iv = {0.0, 0.0};
    return box;
  }

  /// Largest distance from the origin of any factor's effective support.
  double reach() const {
    double r = 0.0;
    for (const auto& iv : effective_box()) r = std::max({r, std::abs(iv.lo), std::abs(iv.hi)});
    return r;
  }

 private:
  int k_;
  std::vector<TensorTerm<Factor>> terms_;
};

using TensorFunction = BasicTensor<SmoothFunction>;

inline TensorFunction tensor_power(const SmoothFunction& f, int k) {
  return TensorFunction::pure(std::vector<SmoothFunction>(static_cast<std::size_t>(k), f));
}

/// Integral of u(x) v(x) over the intersection of the two effective supports.
template <class U, class V, class EvalU, class EvalV>
double overlap_integral(const U& u, const V& v, EvalU eu, EvalV ev, const QuadratureSpec& spec) {
  const Interval a = u.effective_support();
  const Interval b = v.effective_support();
  const double lo = std::max(a.lo, b.lo);
  const double hi = std::min(a.hi, b.hi);
  if (!(hi > lo)) return 0.0;
  return integrate([&](double x) { return eu(u, x) * ev(v, x); }, lo, hi, spec).value;
}

template <Factor1D U, Factor1D V>
double inner_integral(const U& u, const V& v, const QuadratureSpec& spec = {}) {
  auto value = [](const auto& f, double x) { return f(x); };
  return overlap_integral(u, v, value, value, spec);
}

template <DifferentiableFactor U, DifferentiableFactor V>
double derivative_inner_integral(const U& u, const V& v, const QuadratureSpec& spec = {}) {
  auto d = [](const auto& f, double x) { return f.deriv(x); };
  return overlap_integral(u, v, d, d, spec);
}

/// Squared L2(R^k) norm via Fubini over tensor terms.
template <Factor1D Factor>
double continuum_norm_squared(const BasicTensor<Factor>& F, const QuadratureSpec& spec = {}) {
  double s = 0.0;
  const auto& terms = F.terms();
  for (std::size_t a = 0; a < terms.size(); ++a)
    for (std::size_t b = 0; b < terms.size(); ++b) {
      double p = terms[a].coefficient * terms[b].coefficient;
      for (int j = 0; j < F.k() && p != 0.0; ++j) p *= inner_integral(terms[a].factors[j], terms[b].factors[j], spec);
      s += p;
    }
  return s;
}

}  // namespace mosco
