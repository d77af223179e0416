#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mosco/forms.hpp"

using namespace mosco;

namespace {
const auto g = SmoothFunction::gaussian(0.0, 1.0 / std::numbers::sqrt2, 1.0);  // exp(-x^2)

DiscreteVector random_vector(const LatticeWindow& w, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  DiscreteVector v(w, k);
  for (auto& x : v.values()) x = u(rng);
  return v;
}

DiscreteVector constant(const LatticeWindow& w, int k, double c) {
  DiscreteVector v(w, k);
  for (auto& x : v.values()) x = c;
  return v;
}

/// <f, -G f> in the measure the generator is reversible for.
double energy(const GeneratorAction& G, const DiscreteVector& f) {
  const auto Gf = G.apply(f);
  DiscreteVector minus(f.window(), f.k(), f.weight(), f.alpha());
  for (std::size_t i = 0; i < f.size(); ++i) minus[i] = -Gf[i];
  return inner(f, minus);
}
}  // namespace

TEST(Forms, VanishOnConstants) {
  const LatticeWindow w(4, 1.0);
  for (int k = 1; k <= 3; ++k) {
    const auto c = constant(w, k, 3.7);
    EXPECT_EQ(dirichlet_irw_k(c, 1.3).value, 0.0);
    EXPECT_EQ(dirichlet_sip_k(c, 1.3).value, 0.0);
  }
}

TEST(Forms, IrwSingleWalkerTendsToBrownianForm) {
  // alpha int g'^2 = sqrt(pi/2) for g = exp(-x^2)
  const auto v = restrict(g, LatticeWindow(64, 7.0));
  EXPECT_NEAR(dirichlet_irw_k(v, 1.0).value, 1.2533141373155003, 2e-4);
}

TEST(Forms, LinearInAlpha) {
  const auto v = random_vector(LatticeWindow(3, 1.0), 2, 1);
  EXPECT_NEAR(dirichlet_irw_k(v, 2.0).value, 2.0 * dirichlet_irw_k(v, 1.0).value, 1e-12);
}

TEST(Forms, IrwNeedsUniformWeight) {
  const LatticeWindow w(3, 1.0);
  EXPECT_THROW(dirichlet_irw_k(DiscreteVector(w, 1, Weight::nu_weighted), 1.0), std::invalid_argument);
}

TEST(Forms, SingleSipParticleIsAlphaTimesWalker) {
  const auto v = random_vector(LatticeWindow(4, 1.0), 1, 3);
  for (double alpha : {0.5, 1.0, 2.5}) {
    const auto sip = dirichlet_sip_k(v, alpha);
    EXPECT_EQ(sip.inclusion, 0.0);
    EXPECT_NEAR(sip.value, alpha * dirichlet_irw_k(v, alpha).value, 1e-12);
  }
}

TEST(Forms, SplitParts) {
  const auto v = random_vector(LatticeWindow(3, 1.0), 3, 5);
  const auto f = dirichlet_sip_k(v, 0.8);
  EXPECT_DOUBLE_EQ(f.value, f.walk + f.inclusion);
  EXPECT_GT(f.walk, 0.0);
  EXPECT_GT(f.inclusion, 0.0);
}

TEST(Forms, DistantSupportHasNoInclusionAndMatchesIrwAtAlphaOne) {
  // f supported on states with particles at distance >= 3 and >= 2 from the edge of that set
  const LatticeWindow w(3, 2.0);
  auto v = random_vector(w, 2, 7);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto x = state_unindex(w, 2, i);
    if (std::abs(x.sites[0] - x.sites[1]) < 4) v[i] = 0.0;
  }
  const auto sip = dirichlet_sip_k(v, 1.0);
  EXPECT_EQ(sip.inclusion, 0.0);
  EXPECT_NEAR(sip.value, dirichlet_irw_k(v, 1.0).value, 1e-12);
}

TEST(Forms, DisplayedFormsEqualGeneratorEnergies) {
  const LatticeWindow w(3, 1.0);
  const double alpha = 1.7;
  const auto v = random_vector(w, 2, 11);
  EXPECT_NEAR(dirichlet_irw_k(v, alpha).value, energy(GeneratorAction::irw(w, 2, alpha), v), 1e-10);
  EXPECT_NEAR(dirichlet_sip_k(v, alpha).value,
              energy(GeneratorAction::sip(w, 2, alpha), v.reweighted(Weight::nu_weighted, alpha)), 1e-10);
}

TEST(Forms, QuadraticFormIdentities) {
  const LatticeWindow w(3, 1.0);
  const auto f = random_vector(w, 2, 21);
  const auto h = random_vector(w, 2, 22);
  DiscreteVector sum(w, 2), diff(w, 2), scaled(w, 2);
  for (std::size_t i = 0; i < f.size(); ++i) {
    sum[i] = f[i] + h[i];
    diff[i] = f[i] - h[i];
    scaled[i] = -2.5 * f[i];
  }
  for (auto form : {+[](const DiscreteVector& v) { return dirichlet_irw_k(v, 1.4).value; },
                    +[](const DiscreteVector& v) { return dirichlet_sip_k(v, 1.4).value; }}) {
    EXPECT_GE(form(f), 0.0);
    EXPECT_NEAR(form(scaled), 6.25 * form(f), 1e-10);
    EXPECT_NEAR(form(sum) + form(diff), 2 * form(f) + 2 * form(h), 1e-10);
  }
}

TEST(Forms, IrwProductStructure) {
  const LatticeWindow w(5, 1.5);
  const auto f1 = SmoothFunction::bump(0.1, 1.0, 1.0);
  const auto f2 = SmoothFunction::gaussian(-0.2, 0.4, 2.0);
  const auto v1 = restrict(f1, w), v2 = restrict(f2, w);
  const double expected = dirichlet_irw_k(v1, 1.0).value * inner(v2, v2) + dirichlet_irw_k(v2, 1.0).value * inner(v1, v1);
  EXPECT_NEAR(dirichlet_irw_k(restrict_k(TensorFunction::pure({f1, f2}), w), 1.0).value, expected, 1e-12);
}

TEST(BrownianForm, ClosedFormForGaussianProduct) {
  EXPECT_NEAR(dirichlet_bm_k(tensor_power(g, 2), 1.0), std::numbers::pi, 1e-9);
  EXPECT_NEAR(dirichlet_bm_k(tensor_power(g, 1), 2.0), 2 * 1.2533141373155003, 1e-9);
  EXPECT_NEAR(dirichlet_bm_k(tensor_power(g, 1), 2.0, RateConvention{true}), 1.2533141373155003, 1e-9);
}

TEST(BrownianForm, ZeroAmplitudeGivesZero) {
  EXPECT_EQ(dirichlet_bm_k(tensor_power(SmoothFunction::gaussian(0, 1, 0.0), 2), 1.0), 0.0);
}

TEST(BrownianForm, SymmetricUnderFactorPermutation) {
  const auto a = SmoothFunction::bump(0.1, 0.8, 1.0);
  const auto b = SmoothFunction::hermite_gaussian(1, 0.0, 0.5);
  EXPECT_NEAR(dirichlet_bm_k(TensorFunction::pure({a, b}), 1.3), dirichlet_bm_k(TensorFunction::pure({b, a}), 1.3),
              1e-10);
}

TEST(BrownianForm, MultiTermAgreesWithBruteForceQuadrature) {
  TensorFunction F(2);
  F.add_term(1.0, {SmoothFunction::bump(0.0, 0.9), g}).add_term(-0.7, {g, SmoothFunction::hermite_gaussian(1, 0.2, 0.5)});
  const auto brute = integrate(
      [&](std::span<const double> z) {
        const double a = F.partial(0, z), b = F.partial(1, z);
        return a * a + b * b;
      },
      F.effective_box());
  EXPECT_NEAR(dirichlet_bm_k(F, 1.0), brute.value, 1e-8);
}

TEST(Domination, RandomVectorsAtAlphaOne) {
  const LatticeWindow w(4, 1.0);
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(domination_check(random_vector(w, 2, 100 + i), 1.0).ok);
}

TEST(Domination, ConstantsGiveZeroBoth) {
  const auto d = domination_check(constant(LatticeWindow(3, 1.0), 2, 1.0), 1.0);
  EXPECT_EQ(d.sip.value, 0.0);
  EXPECT_EQ(d.irw.value, 0.0);
  EXPECT_TRUE(d.ok);
}

TEST(Domination, RejectsAlphaBelowOne) {
  EXPECT_THROW(domination_check(random_vector(LatticeWindow(3, 1.0), 2, 1), 0.5), std::invalid_argument);
}

TEST(FormGap, SingleParticleGapIsAlphaMinusOneTimesIrw) {
  const auto t = form_gap_experiment(tensor_power(g, 1), 2.5, {8, 16});
  for (const auto& row : t.rows) EXPECT_NEAR(row[1], 1.5 * row[2], 1e-12);
}

TEST(FormGap, DecreasesForTwoParticles) {
  const auto t = form_gap_experiment(tensor_power(g, 2), 1.0, {8, 16, 32});
  EXPECT_TRUE(strictly_decreasing(t.column("gap")));
  EXPECT_NEAR(t.fitted_orders.at("gap"), 1.0, 0.1);
}

TEST(FormConvergence, ZeroFunction) {
  TensorFunction zero(2);
  zero.add_term(0.0, {g, g});
  const auto t = form_convergence_experiment(zero, 1.0, {4, 8});
  for (const auto& row : t.rows)
    for (std::size_t c = 1; c < row.size(); ++c) EXPECT_EQ(row[c], 0.0);
}

TEST(FormConvergence, ErrorsHalveOrBetter) {
  const auto t = form_convergence_experiment(tensor_power(g, 2), 1.0, {8, 16, 32});
  EXPECT_TRUE(strictly_decreasing(t.column("rel_err_irw")));
  EXPECT_TRUE(strictly_decreasing(t.column("rel_err_sip")));
}
