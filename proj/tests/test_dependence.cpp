#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "osclab/dependence.hpp"

using namespace osclab;
using D = InnovationDistribution;

namespace {

ProcessModel geometric_linear(double rho, std::size_t L, D law = D::gaussian(0, 1)) {
  std::vector<double> a(L);
  for (std::size_t k = 0; k < L; ++k) a[k] = std::pow(rho, static_cast<double>(k));
  return ProcessModel::linear(a, law);
}

}  // namespace

TEST(Pdm, LinearLagMatchesCoefficientTimesRootTwo) {
  Stream s(7);
  const auto e = estimate_pdm(geometric_linear(0.5, 30), 3, 2.0, 10000, s);
  EXPECT_NEAR(e.estimate, 0.125 * std::numbers::sqrt2, 3.0 * e.stderr_);
  EXPECT_FALSE(e.unreliable);
}

TEST(Pdm, IidIsExactlyZeroBeyondLagZero) {
  Stream s(8);
  const auto e = estimate_pdm(ProcessModel::iid(D::gaussian(0, 1)), 5, 2.0, 500, s);
  EXPECT_EQ(e.estimate, 0.0);
  EXPECT_EQ(e.stderr_, 0.0);
  Stream s2(8);
  const auto p = pdm_summability(ProcessModel::iid(D::gaussian(0, 1)), 2.0, 6, 500, s2);
  EXPECT_GT(p.pdm[0], 0.0);
  for (std::size_t k = 1; k < p.pdm.size(); ++k) EXPECT_EQ(p.pdm[k], 0.0);
  EXPECT_EQ(p.partial_sums.back(), p.pdm_pow[0]);
  EXPECT_EQ(p.tail.verdict, Verdict::Summable);
}

TEST(Pdm, TarDecaysAtTheContractionRate) {
  Stream s(9);
  const auto p = pdm_summability(ProcessModel::threshold_ar(0.5, -0.5, D::gaussian(0, 1)), 2.0, 12, 2000, s);
  EXPECT_NEAR(p.decay_fit.slope, std::log(0.5), 0.1);
  EXPECT_EQ(p.tail.verdict, Verdict::Summable);
}

TEST(Pdm, LinearTotalIsTwoRootTwo) {
  Stream s(10);
  const auto p = pdm_summability(geometric_linear(0.5, 30), 2.0, 30, 2000, s);
  // all lags share the coupling gap, so the errors add up rather than in quadrature
  double se = 0.0;
  for (double v : p.pdm_stderr) se += v;
  EXPECT_NEAR(p.partial_sums.back(), 2.0 * std::numbers::sqrt2, 4.0 * se);
  for (std::size_t k = 1; k < p.partial_sums.size(); ++k) EXPECT_GE(p.partial_sums[k], p.partial_sums[k - 1]);
  EXPECT_EQ(p.tail.verdict, Verdict::Summable);
}

TEST(Pdm, SlowContractionIsStillSummable) {
  Stream s(11);
  const auto p = pdm_summability(ProcessModel::threshold_ar(0.9, -0.9, D::gaussian(0, 1)), 2.0, 24, 2000, s);
  EXPECT_EQ(p.tail.verdict, Verdict::Summable);
  EXPECT_LT(p.decay_fit.slope, 0.0);
  EXPECT_NEAR(p.decay_fit.slope, std::log(0.9), 0.05);
}

TEST(Pdm, IndependentRunsAgree) {
  const auto m = ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1));
  Stream a(100), b(200);
  const auto x = estimate_pdm(m, 2, 2.0, 4000, a);
  const auto y = estimate_pdm(m, 2, 2.0, 4000, b);
  EXPECT_LT(std::abs(x.estimate - y.estimate), 5.0 * std::hypot(x.stderr_, y.stderr_));
}

TEST(Pdm, ThreadCountDoesNotChangeTheEstimate) {
  const auto m = ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1));
  Stream a(12), b(12);
  EXPECT_EQ(estimate_pdm(m, 4, 2.0, 1000, a, 1).estimate, estimate_pdm(m, 4, 2.0, 1000, b, 4).estimate);
}

TEST(Pdm, HeavyTailsFlagUnreliableMoments) {
  Stream s(13);
  const auto e = estimate_pdm(geometric_linear(0.5, 10, D::cauchy(0, 1)), 1, 1.5, 1000, s);
  EXPECT_TRUE(e.unreliable);
  EXPECT_GT(e.estimate, 0.0);
  Stream s2(13);
  EXPECT_FALSE(estimate_pdm(geometric_linear(0.5, 10, D::cauchy(0, 1)), 1, 0.5, 1000, s2).unreliable);
}

TEST(Pdm, LinearCauchyMatchesTheNormOracle) {
  // E|Cauchy(0, s)|^p = s^p / cos(p pi / 2) for p < 1; e - e' is Cauchy(0, 2).
  const double p = 0.4;
  const double closed = std::pow(std::pow(2.0, p) / std::cos(p * std::numbers::pi / 2.0), 1.0 / p);
  const auto norm = epsilon_difference_norm(D::cauchy(0, 1), p);
  EXPECT_FALSE(norm.closed_form);
  EXPECT_NEAR(norm.value, closed, 4.0 * norm.stderr_);
  Stream s(14);
  const auto e = estimate_pdm(geometric_linear(0.5, 10, D::cauchy(0, 1)), 2, p, 20000, s);
  EXPECT_NEAR(e.estimate, 0.25 * norm.value, 4.0 * e.stderr_ + 4.0 * 0.25 * norm.stderr_);
}

TEST(Pdm, Errors) {
  const auto m = ProcessModel::iid(D::gaussian(0, 1));
  Stream s(15);
  EXPECT_THROW(estimate_pdm(m, 1, 2.0, 99, s), ConfigError);
  EXPECT_THROW(estimate_pdm(m, 1, 0.0, 500, s), ConfigError);
  EXPECT_THROW(estimate_pdm(m, 1, 2.5, 500, s), ConfigError);
  EXPECT_THROW(pdm_summability(m, 2.0, 3, 500, s), ConfigError);
}

TEST(Norm, ClosedFormsAndCache) {
  const auto g = epsilon_difference_norm(D::gaussian(0, 1), 2.0);
  EXPECT_TRUE(g.closed_form);
  EXPECT_NEAR(g.value, std::numbers::sqrt2, 1e-14);
  EXPECT_NEAR(epsilon_difference_norm(D::stable(2.0, 1.0), 2.0).value, 2.0, 1e-14);
  // Cauchy, alpha = 1/2: (E|Cauchy(0,2)|^{1/2})^2 = (sqrt 2 / cos(pi/4))^2 = 4
  const auto c = epsilon_difference_norm(D::cauchy(0, 1), 0.5);
  EXPECT_NEAR(c.value, 4.0, 0.1);
  EXPECT_EQ(epsilon_difference_norm(D::cauchy(0, 1), 0.5).value, c.value);
  const auto u = epsilon_difference_norm(D::uniform(0, 1), 2.0);
  EXPECT_NEAR(u.value, std::sqrt(1.0 / 6.0), 4.0 * u.stderr_);
}

TEST(CfDistance, ZeroCases) {
  Stream s(16);
  EXPECT_EQ(cf_distance_onestep(geometric_linear(0.5, 10), 2, 0.0, 500, s), 0.0);
  for (double th : {0.3, 1.0, 5.0}) EXPECT_EQ(cf_distance_onestep(ProcessModel::iid(D::gaussian(0, 1)), 3, th, 200, s), 0.0);
}

TEST(CfDistance, LinearExampleMatchesClosedForm) {
  // k = 1: state gap Y_0 - Y_0* = 0.6 (e_0 - e'_0) ~ N(0, 0.72); one-step law 0.8 e.
  const double oracle = std::exp(-0.32) * std::sqrt(2.0 - 2.0 * std::exp(-0.36));
  EXPECT_NEAR(oracle, 0.564647, 1e-6);
  Stream s(17);
  EXPECT_NEAR(cf_distance_onestep(ProcessModel::linear({0.8, 0.6}, D::gaussian(0, 1)), 1, 1.0, 100000, s), oracle, 0.005);
}

TEST(CfDistance, BoundedByTwiceTheCf) {
  const auto m = ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1));
  Stream s(18);
  for (double th = -6.0; th <= 6.0; th += 0.37) {
    const double d = cf_distance_onestep(m, 1, th, 300, s);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 2.0 * std::abs(cf_eval(m.innovation(), th)) + 1e-15);
  }
}

TEST(CfDistance, NonAdditiveModelIsRefused) {
  Stream s(19);
  EXPECT_THROW(cf_distance_onestep(ProcessModel::linear({0.0, 1.0}, D::gaussian(0, 1)), 1, 1.0, 200, s),
               CapabilityError);
}

TEST(Condition29, IidTermsVanish) {
  Stream s(20);
  const auto r = condition29_partial_sum(ProcessModel::iid(D::gaussian(0, 1)), 6, {}, 200, s);
  for (double t : r.terms) EXPECT_EQ(t, 0.0);
  for (double b : r.bounds) EXPECT_EQ(b, 0.0);
}

TEST(Condition29, LinearTermsShrinkByRho) {
  Stream s(21);
  const auto r = condition29_partial_sum(geometric_linear(0.5, 30), 12, {}, 2000, s);
  for (std::size_t k = 6; k < 12; ++k) EXPECT_NEAR(r.terms[k] / r.terms[k + 1], 2.0, 0.3) << "k=" << k;
  for (std::size_t k = 0; k <= 12; ++k) EXPECT_LE(r.terms[k], r.bounds[k]);
  EXPECT_EQ(r.tail.verdict, Verdict::Summable);
}

TEST(Condition29, TarTermsStayBelowTheMomentBound) {
  Stream s(22);
  const auto r = condition29_partial_sum(ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1)), 12, {}, 1000, s);
  for (std::size_t k = 0; k <= 12; ++k) EXPECT_LE(r.terms[k], r.bounds[k]);
  for (std::size_t k = 1; k <= 12; ++k) EXPECT_GE(r.partial_sums[k], r.partial_sums[k - 1]);
}

TEST(Condition29, UniformInnovationIsRefused) {
  Stream s(23);
  EXPECT_THROW(condition29_partial_sum(ProcessModel::threshold_ar(0.5, -0.3, D::uniform(-1, 1)), 6, {}, 200, s),
               CapabilityError);
}

TEST(BoundChain, Examples) {
  const auto anti = bound_chain_check(std::numbers::pi, 0.0);
  EXPECT_NEAR(anti.lhs, 2.0, 1e-15);
  EXPECT_EQ(anti.mid, 2.0);
  EXPECT_TRUE(anti.holds);
  const auto same = bound_chain_check(1.3, 1.3);
  EXPECT_EQ(same.lhs, 0.0);
  EXPECT_EQ(same.rhs, 0.0);
  EXPECT_TRUE(same.holds);
  const auto small = bound_chain_check(0.1, 0.0);
  EXPECT_NEAR(small.lhs, 0.09996, 1e-5);
  EXPECT_NEAR(small.lhs, 2.0 * std::sin(0.05), 1e-16);
  EXPECT_LE(small.lhs, 0.1);
}

TEST(BoundChain, HoldsOnRandomPairs) {
  std::mt19937_64 g(33);
  std::uniform_real_distribution<double> u(-50.0, 50.0), al(0.05, 2.0);
  std::size_t failures = 0;
  for (int i = 0; i < 1000000; ++i) {
    const double a = u(g), b = (i % 3 == 0) ? a + 1e-3 * u(g) : u(g);
    if (!bound_chain_check(a, b, al(g)).holds) ++failures;
  }
  EXPECT_EQ(failures, 0u);
}

TEST(Summability, VerdictsOnSyntheticSeries) {
  std::vector<double> geo, harmonic, flat;
  for (int k = 0; k <= 20; ++k) {
    geo.push_back(std::pow(0.7, k));
    harmonic.push_back(1.0 / (k + 1.0));
    flat.push_back(1.0);
  }
  EXPECT_EQ(summability_verdict(geo).verdict, Verdict::Summable);
  EXPECT_EQ(summability_verdict(geo).law, "geometric");
  EXPECT_EQ(summability_verdict(harmonic).verdict, Verdict::NotSummable);
  EXPECT_EQ(summability_verdict(flat).verdict, Verdict::NotSummable);
  EXPECT_EQ(to_string(Verdict::Inconclusive), "inconclusive");
}
