#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mosco/hilbert.hpp"

using namespace mosco;

namespace {
const auto g = SmoothFunction::gaussian(0.0, 1.0 / std::sqrt(2.0), 1.0);  // exp(-x^2)

DiscreteVector random_vector(const LatticeWindow& w, int k, std::mt19937_64& rng, Weight weight = Weight::uniform,
                             double alpha = 1.0) {
  std::uniform_real_distribution<double> u(-1, 1);
  DiscreteVector v(w, k, weight, alpha);
  for (auto& x : v.values()) x = u(rng);
  return v;
}
}  // namespace

TEST(Restrict, NearConstantGivesOnes) {
  const LatticeWindow w(4, 2.0);
  const auto v = restrict(SmoothFunction::gaussian(0.0, 1e7, 1.0), w);
  for (double x : v.values()) EXPECT_NEAR(x, 1.0, 1e-12);
}

TEST(Restrict, BumpOutsideWindowIsZero) {
  const LatticeWindow w(4, 1.0);
  const auto v = restrict(SmoothFunction::bump(3.0, 0.5, 1.0), w);
  for (double x : v.values()) EXPECT_EQ(x, 0.0);
}

TEST(Restrict, SamplesAtLatticePoints) {
  const LatticeWindow w(4, 1.0);
  const auto v = restrict(g, w);
  EXPECT_DOUBLE_EQ(v.at(CoordState{1}), std::exp(-0.0625));
  EXPECT_DOUBLE_EQ(v.at(CoordState{-4}), std::exp(-1.0));
}

TEST(Restrict, GaussianNormSquaredTendsToClosedForm) {
  // ||Phi_n g||^2 = n^{-1} sum exp(-2 x^2) -> sqrt(pi/2)
  for (int n : {4, 8, 16}) {
    const auto v = restrict(g, LatticeWindow(n, 8.0));
    EXPECT_NEAR(inner(v, v), 1.2533141373155003, n >= 8 ? 1e-12 : 1e-3);
  }
}

TEST(RestrictK, ProductOfRestrictions) {
  const LatticeWindow w(4, 1.5);
  const auto f = SmoothFunction::bump(0.2, 1.0, 2.0);
  const auto h = SmoothFunction::hermite_gaussian(2, -0.3, 0.5);
  const auto v = restrict_k(TensorFunction::pure({f, h}), w);
  for (int a = w.min_site(); a <= w.max_site(); ++a)
    for (int b = w.min_site(); b <= w.max_site(); ++b)
      EXPECT_DOUBLE_EQ(v.at(CoordState{a, b}), f(w.position(a)) * h(w.position(b)));
}

TEST(RestrictK, SingleFactorMatchesRestrict) {
  const LatticeWindow w(5, 1.0);
  const auto a = restrict_k(TensorFunction::pure({g}), w);
  const auto b = restrict(g, w);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(RestrictK, KMismatchRejected) {
  EXPECT_THROW(restrict_k(tensor_power(g, 2), LatticeWindow(4, 1.0), 3), std::invalid_argument);
}

TEST(RestrictK, LinearInTerms) {
  const LatticeWindow w(4, 1.0);
  const auto f = SmoothFunction::bump(0.0, 0.7, 1.0);
  TensorFunction A(2);
  A.add_term(2.0, {f, g}).add_term(-3.0, {g, g});
  const auto va = restrict_k(A, w);
  const auto v1 = restrict_k(TensorFunction::pure({f, g}), w);
  const auto v2 = restrict_k(tensor_power(g, 2), w);
  for (std::size_t i = 0; i < va.size(); ++i) EXPECT_NEAR(va[i], 2 * v1[i] - 3 * v2[i], 1e-14);
}

TEST(Norm, ProductNormFactorises) {
  const LatticeWindow w(6, 2.0);
  const auto f = SmoothFunction::bump(0.3, 1.2, 1.0);
  const double n1 = norm(restrict(f, w));
  const double n2 = norm(restrict(g, w));
  EXPECT_NEAR(norm(restrict_k(tensor_power(f, 2), w)), n1 * n1, 1e-13);
  EXPECT_NEAR(norm(restrict_k(TensorFunction::pure({f, g, f}), w)), n1 * n2 * n1, 1e-13);
}

TEST(Inner, OnesVectorCountsSites) {
  const LatticeWindow w(4, 1.0);
  DiscreteVector one(w, 1);
  for (auto& x : one.values()) x = 1.0;
  EXPECT_DOUBLE_EQ(inner(one, one), 9.0 / 4.0);
}

TEST(Inner, NormSquaredAndCauchySchwarz) {
  std::mt19937_64 rng(17);
  const LatticeWindow w(3, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto weight = trial % 2 ? Weight::nu_weighted : Weight::uniform;
    const auto u = random_vector(w, 2, rng, weight, 1.7);
    const auto v = random_vector(w, 2, rng, weight, 1.7);
    EXPECT_NEAR(inner(u, u), norm(u) * norm(u), 1e-12);
    EXPECT_LE(std::abs(inner(u, v)), norm(u) * norm(v) + 1e-12);
  }
}

TEST(Inner, MismatchRejected) {
  const LatticeWindow w(3, 1.0);
  EXPECT_THROW(inner(DiscreteVector(w, 1), DiscreteVector(w, 2)), std::invalid_argument);
  EXPECT_THROW(inner(DiscreteVector(w, 1), DiscreteVector(LatticeWindow(4, 1.0), 1)), std::invalid_argument);
  EXPECT_THROW(inner(DiscreteVector(w, 1), DiscreteVector(w, 1, Weight::nu_weighted)), std::invalid_argument);
  EXPECT_THROW(inner(DiscreteVector(w, 1, Weight::nu_weighted, 1.0), DiscreteVector(w, 1, Weight::nu_weighted, 2.0)),
               std::invalid_argument);
  EXPECT_THROW(DiscreteVector(w, 1, std::vector<double>(3)), std::invalid_argument);
}

TEST(Inner, NuWeightedMatchesManualSum) {
  const LatticeWindow w(2, 1.0);
  std::mt19937_64 rng(2);
  const double alpha = 1.5;
  const auto u = random_vector(w, 2, rng, Weight::nu_weighted, alpha);
  const auto v = random_vector(w, 2, rng, Weight::nu_weighted, alpha);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto x = state_unindex(w, 2, i);
    s += (x.sites[0] == x.sites[1] ? alpha * (alpha + 1) : alpha * alpha) * u[i] * v[i];
  }
  EXPECT_NEAR(inner(u, v), s / 4.0, 1e-14);
}

TEST(Inner, NuEqualsUniformOffDiagonalAtAlphaOne) {
  const LatticeWindow w(3, 1.0);
  std::mt19937_64 rng(8);
  auto u = random_vector(w, 3, rng);
  auto v = random_vector(w, 3, rng);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto x = state_unindex(w, 3, i);
    if (xi_of(x).counts().size() < 3) u[i] = 0.0;
  }
  EXPECT_NEAR(inner(u, v), inner(u.reweighted(Weight::nu_weighted, 1.0), v.reweighted(Weight::nu_weighted, 1.0)),
              1e-14);
}

TEST(HilbertExperiment, ZeroFunctionGivesZeroErrors) {
  TensorFunction zero(2);
  zero.add_term(0.0, {g, g});
  const auto t = hilbert_convergence_experiment(zero, {4, 8});
  for (const auto& row : t.rows) EXPECT_EQ(row[3], 0.0);
}

TEST(HilbertExperiment, GaussianProductErrorDecreases) {
  const auto t = hilbert_convergence_experiment(tensor_power(SmoothFunction::gaussian(0, 0.05, 1), 2), {8, 16, 32, 64});
  EXPECT_TRUE(strictly_decreasing(t.column("error")));
  EXPECT_NEAR(t.rows.front()[2], std::sqrt(0.05 * std::sqrt(M_PI)) * std::sqrt(0.05 * std::sqrt(M_PI)), 1e-10);
}

TEST(HilbertExperiment, ReportsNuColumnsOnRequest) {
  HilbertOptions o;
  o.nu_alpha = 2.0;
  const auto t = hilbert_convergence_experiment(tensor_power(g, 2), {4, 8}, o);
  EXPECT_EQ(t.columns.size(), 6u);
  EXPECT_GT(t.rows.back()[4], t.rows.back()[1]);  // nu >= alpha^2 > 1 everywhere
}

TEST(AutoHalfWidth, CompactAndSchwartzPolicies) {
  EXPECT_DOUBLE_EQ(auto_half_width({SmoothFunction::bump(0.5, 0.25)}, 1.0, 0.0), 3.0);
  const auto s = SmoothFunction::gaussian(0.0, 1.0);
  EXPECT_DOUBLE_EQ(auto_half_width({s}, 2.0, 0.5), s.effective_radius() + 2.0 * std::sqrt(2.0));
}
