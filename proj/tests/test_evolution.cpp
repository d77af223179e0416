#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>
#include <sstream>

#include "mosco/evolution.hpp"

using namespace mosco;

namespace {

const auto g = SmoothFunction::gaussian(0.0, 1.0 / std::sqrt(2.0), 1.0);  // exp(-x^2)

Eigen::MatrixXd dense(const GeneratorAction& G) {
  const auto M = G.assemble();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M.rows()), static_cast<Eigen::Index>(M.rows()));
  for (std::size_t r = 0; r < M.rows(); ++r)
    for (std::size_t p = M.row_start[r]; p < M.row_start[r + 1]; ++p)
      D(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(M.columns[p])) = M.values[p];
  return D;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double expm_gap(const GeneratorAction& G, double t, std::uint64_t seed) {
  const auto f = random_vector(G.state_count(), seed);
  const Eigen::VectorXd ef = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
  const Eigen::VectorXd expected = (dense(G) * t).exp() * ef;
  const auto got = semigroup_apply(G, t, f);
  return max_abs_diff(got, std::span<const double>(expected.data(), f.size()));
}

}  // namespace

TEST(PoissonWeights, MassMeanAndDegenerateCase) {
  EXPECT_EQ(poisson_weights(0.0, {}), std::vector<double>{1.0});
  for (double mu : {0.3, 5.0, 80.0}) {
    const auto w = poisson_weights(mu, {});
    double mass = 0.0, mean = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) mass += w[j], mean += static_cast<double>(j) * w[j];
    EXPECT_NEAR(mass, 1.0, 1e-11);
    EXPECT_NEAR(mean, mu, 1e-9 * std::max(1.0, mu));
  }
  EXPECT_THROW(poisson_weights(-1.0, {}), std::invalid_argument);
}

TEST(Uniformization, MatchesDenseExponentialSingleWalker) {
  const LatticeWindow w(4, 4.0);  // 33 sites
  ASSERT_EQ(w.site_count(), 33);
  for (double t : {0.01, 0.3, 2.0}) {
    EXPECT_LE(expm_gap(GeneratorAction::irw(w, 1, 1.0), t, 1), 1e-9);
    EXPECT_LE(expm_gap(GeneratorAction::irw(w, 1, 0.7, RateConvention{true}), t, 2), 1e-9);
  }
}

TEST(Uniformization, MatchesDenseExponentialTwoParticles) {
  const LatticeWindow w(4, 4.0);
  EXPECT_LE(expm_gap(GeneratorAction::sip(w, 2, 1.3), 0.2, 3), 1e-9);
  EXPECT_LE(expm_gap(GeneratorAction::irw(w, 2, 0.6), 0.2, 4), 1e-9);
}

TEST(Uniformization, MatchesDenseExponentialConfigurations) {
  const LatticeWindow w(2, 1.0);
  EXPECT_LE(expm_gap(GeneratorAction::sip_config(w, 0.8, 3), 0.5, 5), 1e-9);
}

TEST(Uniformization, TimeZeroIsIdentity) {
  const auto G = GeneratorAction::sip(LatticeWindow(3, 1.0), 2, 1.0);
  const auto f = random_vector(G.state_count(), 6);
  EXPECT_EQ(semigroup_apply(G, 0.0, f), f);
  EXPECT_THROW(semigroup_apply(G, -1.0, f), std::invalid_argument);
}

TEST(Uniformization, ConstantsArePreserved) {
  const auto G = GeneratorAction::sip(LatticeWindow(3, 1.0), 3, 2.0);
  const std::vector<double> one(G.state_count(), 1.0);
  for (double x : semigroup_apply(G, 0.7, one)) EXPECT_NEAR(x, 1.0, 1e-11);
}

TEST(Uniformization, PositivityAndContraction) {
  const auto G = GeneratorAction::sip(LatticeWindow(3, 1.0), 2, 0.5);
  const auto f = random_vector(G.state_count(), 7, 0.0);
  const auto h = random_vector(G.state_count(), 8);
  for (double x : semigroup_apply(G, 0.4, f)) EXPECT_GE(x, 0.0);
  double mh = 0.0;
  for (double x : h) mh = std::max(mh, std::abs(x));
  for (double x : semigroup_apply(G, 0.4, h)) EXPECT_LE(std::abs(x), mh + 1e-12);
}

TEST(Uniformization, SemigroupProperty) {
  const auto G = GeneratorAction::sip(LatticeWindow(3, 1.0), 2, 1.1);
  const auto f = random_vector(G.state_count(), 9);
  const auto once = semigroup_apply(G, 0.5, f);
  const auto twice = semigroup_apply(G, 0.3, semigroup_apply(G, 0.2, f));
  EXPECT_LE(max_abs_diff(once, twice), 1e-11);
}

TEST(Uniformization, SipIsSelfAdjointInNuWeight) {
  const LatticeWindow w(3, 1.0);
  const double alpha = 1.8;
  const auto G = GeneratorAction::sip(w, 2, alpha);
  DiscreteVector f(w, 2, random_vector(G.state_count(), 10));
  DiscreteVector h(w, 2, random_vector(G.state_count(), 11));
  const auto Tf = semigroup_apply(G, 0.3, f).reweighted(Weight::nu_weighted, alpha);
  const auto Th = semigroup_apply(G, 0.3, h).reweighted(Weight::nu_weighted, alpha);
  EXPECT_NEAR(inner(Tf, h.reweighted(Weight::nu_weighted, alpha)), inner(f.reweighted(Weight::nu_weighted, alpha), Th),
              1e-11);
}

TEST(Uniformization, TermCapRaises) {
  const auto G = GeneratorAction::irw(LatticeWindow(16, 1.0), 1, 1.0);
  UniformizationSpec spec;
  spec.max_terms = 50;
  const std::vector<double> f(G.state_count(), 1.0);
  EXPECT_THROW(semigroup_apply(G, 10.0, f, spec), UniformizationCapExceeded);
}

TEST(Heat, GaussianClosedFormAtCentre) {
  for (double alpha : {0.5, 1.0, 2.0})
    for (double t : {0.0, 0.1, 1.0}) {
      const auto S = heat_apply(tensor_power(g, 1), t, alpha);
      EXPECT_NEAR(S(std::vector<double>{0.0}), 1.0 / std::sqrt(1.0 + 4.0 * alpha * t), 1e-15);
      const auto H = heat_apply(tensor_power(g, 1), t, alpha, RateConvention{true});
      EXPECT_NEAR(H(std::vector<double>{0.0}), 1.0 / std::sqrt(1.0 + 2.0 * alpha * t), 1e-15);
    }
}

TEST(Heat, QuadratureMatchesClosedForm) {
  const auto f = SmoothFunction::gaussian(0.3, 0.4, 1.7);
  const HeatFactor closed(f, 0.2), quad(f, 0.2, true);
  for (double x : {-1.5, -0.2, 0.0, 0.3, 0.9, 2.2}) {
    EXPECT_NEAR(quad(x), closed(x), 1e-8);
    EXPECT_NEAR(quad.deriv(x), closed.deriv(x), 1e-8);
  }
}

TEST(Heat, BumpMassIsConserved) {
  const auto b = SmoothFunction::bump(0.0, 0.5, 1.0);
  const HeatFactor h(b, 0.3);
  const auto s = h.effective_support();
  const auto t = b.effective_support();
  EXPECT_NEAR(integrate([&](double x) { return h(x); }, s.lo, s.hi).value,
              integrate([&](double x) { return b(x); }, t.lo, t.hi).value, 1e-9);
}

TEST(SSA, SameSeedSamePath) {
  const auto G = GeneratorAction::sip(LatticeWindow(4, 1.0), 2, 1.0);
  const auto a = ssa_simulate(G, CoordState{0, 1}, 0.5, 42);
  const auto b = ssa_simulate(G, CoordState{0, 1}, 0.5, 42);
  EXPECT_EQ(a.times, b.times);
  EXPECT_EQ(a.states, b.states);
  EXPECT_GT(a.times.size(), 1u);
  std::ostringstream sa, sb;
  write_jsonl(sa, a);
  write_jsonl(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(SSA, ReplicaEnginesDiffer) {
  auto a = replica_engine(1, 0), b = replica_engine(1, 1), c = replica_engine(2, 0);
  const auto x = a();
  EXPECT_NE(x, b());
  EXPECT_NE(x, c());
  EXPECT_EQ(x, replica_engine(1, 0)());
}

TEST(SSA, EmptyConfigurationStaysEmpty) {
  const auto G = GeneratorAction::sip_config(LatticeWindow(4, 1.0), 1.0);
  auto rng = replica_engine(3, 0);
  EXPECT_TRUE(ssa_final(G, ParticleConfiguration{}, 5.0, rng).empty());
}

TEST(SSA, ParticleCountConserved) {
  const LatticeWindow w(4, 1.0);
  const auto G = GeneratorAction::sip_config(w, 0.5);
  auto rng = replica_engine(4, 0);
  const auto eta = ssa_final(G, ParticleConfiguration{{0, 3}, {2, 2}}, 1.0, rng);
  EXPECT_EQ(eta.total(), 5);
  EXPECT_TRUE(eta.fits(w));
}

TEST(SSA, MeanSquaredDisplacementOfFreeWalker) {
  // rate alpha n^2 per direction: E[X_t^2] = 2 alpha t in macroscopic units
  const double alpha = 1.5, t = 0.2;
  const LatticeWindow w(8, 6.0);
  const auto G = GeneratorAction::irw(w, 1, alpha);
  const auto est = ssa_expectation(
      G, CoordState{0}, t,
      [&](const CoordState& x) {
        const double p = w.position(x.sites[0]);
        return p * p;
      },
      4000, 77);
  EXPECT_LE(std::abs(est.mean - 2 * alpha * t), 3 * est.standard_error);
}

TEST(Duality, TimeZeroIsExact) {
  const LatticeWindow w(2, 1.0);
  const auto r = duality_check(w, ParticleConfiguration{{0, 2}, {1, 1}}, CoordState{0, 0}, 0.0, 1.0, 100, 1);
  EXPECT_DOUBLE_EQ(r.mc_estimate, r.exact_dual);
  EXPECT_EQ(r.mc_stderr, 0.0);
  EXPECT_TRUE(r.ok);
}

TEST(Duality, SingleParticleOccupation) {
  const LatticeWindow w(2, 1.0);
  const auto r = duality_check(w, ParticleConfiguration{{0, 3}}, CoordState{1}, 0.05, 2.0, 4000, 9);
  EXPECT_TRUE(r.ok) << r.mc_estimate << " vs " << r.exact_dual;
}

TEST(Duality, ConfigurationSideIsExactDual) {
  const LatticeWindow w(2, 1.0);
  const ParticleConfiguration eta0{{-1, 1}, {0, 2}, {2, 1}};
  for (const auto& x : {CoordState{0}, CoordState{0, 1}, CoordState{-1, -1}}) {
    const auto dual = GeneratorAction::sip(w, x.k(), 1.4);
    const double exact = semigroup_apply(dual, 0.03, dual_function(w, x.k(), eta0, 1.4)).at(x);
    EXPECT_NEAR(configuration_dual_expectation(w, eta0, x, 0.03, 1.4), exact, 1e-10);
  }
}

TEST(SemigroupExperiment, TimeZeroHasNoError) {
  const auto t = semigroup_convergence_experiment(tensor_power(g, 1), 1.0, 0.0, {4, 8});
  for (const auto& row : t.rows) {
    EXPECT_EQ(row[1], 0.0);
    EXPECT_EQ(row[2], 0.0);
  }
}

TEST(SemigroupExperiment, SingleWalkerErrorDecreases) {
  const auto t = semigroup_convergence_experiment(tensor_power(g, 1), 1.0, 0.1, {4, 8, 16});
  EXPECT_TRUE(strictly_decreasing(t.column("err_irw_k")));
  EXPECT_TRUE(strictly_decreasing(t.column("err_sip_k")));
  EXPECT_NEAR(t.fitted_orders.at("err_irw_k"), 2.0, 0.3);
}
