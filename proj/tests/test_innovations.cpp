#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "osclab/innovations.hpp"
#include "osclab/stats.hpp"

using namespace osclab;
using D = InnovationDistribution;

namespace {

std::vector<D> all_kinds() {
  return {D::gaussian(0.3, 1.7), D::uniform(-1, 2), D::cauchy(0.5, 0.8), D::stable(1.5, 1.2), D::stable(0.7, 1.0)};
}

double ks_against(const D& law, std::vector<double> x) {
  std::sort(x.begin(), x.end());
  return stats::ks_statistic(x, [&](double v) { return law.cdf(v); });
}

}  // namespace

TEST(Sampling, GaussianMeanWithinCltBand) {
  Stream s(101);
  const auto x = sample_innovations(D::gaussian(0, 1), 100000, s);
  EXPECT_NEAR(stats::mean(x), 0.0, 4.0 / std::sqrt(1e5));
}

TEST(Sampling, StableTwoIsGaussianWithVarianceTwo) {
  Stream s(102);
  const auto x = sample_innovations(D::stable(2.0, 1.0), 100000, s);
  EXPECT_LT(ks_against(D::gaussian(0, std::sqrt(2.0)), x), stats::ks_critical_one_sample(x.size(), 1e-3));
}

TEST(Sampling, CauchyMedianNearZero) {
  Stream s(103);
  const auto x = sample_innovations(D::cauchy(0, 1), 100000, s);
  // median CLT: sd = 1 / (2 f(0) sqrt(n)) = pi / (2 sqrt(n)) ~ 0.005
  EXPECT_NEAR(stats::median(x), 0.0, 0.02);
}

TEST(Sampling, KsAgainstClosedFormCdfs) {
  std::uint64_t seed = 200;
  for (const auto& law : {D::gaussian(0.3, 1.7), D::uniform(-1, 2), D::cauchy(0.5, 0.8), D::stable(1.0, 1.3)}) {
    Stream s(++seed);
    const auto x = sample_innovations(law, 100000, s);
    EXPECT_LT(ks_against(law, x), stats::ks_critical_one_sample(x.size(), 1e-3)) << to_string(law.kind());
  }
}

TEST(Sampling, StableOneMatchesCauchyOfSameScale) {
  Stream s(210);
  const auto x = sample_innovations(D::stable(1.0, 2.0), 100000, s);
  EXPECT_LT(ks_against(D::cauchy(0, 2.0), x), stats::ks_critical_one_sample(x.size(), 1e-3));
}

TEST(Sampling, BitIdenticalForIdenticalSeed) {
  for (const auto& law : all_kinds()) {
    Stream a(77), b(77);
    EXPECT_EQ(sample_innovations(law, 1000, a), sample_innovations(law, 1000, b));
  }
}

TEST(Sampling, InvalidParametersAreConfigErrors) {
  EXPECT_THROW(D::gaussian(0, 0), ConfigError);
  EXPECT_THROW(D::gaussian(0, -1), ConfigError);
  EXPECT_THROW(D::uniform(1, 1), ConfigError);
  EXPECT_THROW(D::uniform(2, 1), ConfigError);
  EXPECT_THROW(D::stable(0.0, 1), ConfigError);
  EXPECT_THROW(D::stable(2.5, 1), ConfigError);
  EXPECT_THROW(D::cauchy(0, 0), ConfigError);
  Stream s(1);
  EXPECT_THROW(sample_innovations(D::gaussian(0, 1), 0, s), ConfigError);
  try {
    D::gaussian(0, -1);
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "innovation.sd");
  }
}

TEST(CharacteristicFunction, ClosedFormValues) {
  for (const auto& law : all_kinds()) EXPECT_EQ(cf_eval(law, 0.0), std::complex<double>(1.0, 0.0));
  EXPECT_NEAR(cf_eval(D::gaussian(0, 1), 1.0).real(), 0.60653, 1e-5);
  EXPECT_NEAR(cf_eval(D::gaussian(0, 1), 1.0).real(), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(cf_eval(D::stable(1.5, 1), 2.0).real(), 0.05910, 1e-5);
  // uniform(0,1): (e^{it} - 1) / (it)
  const auto u = cf_eval(D::uniform(0, 1), 2.0);
  const auto expect = (std::exp(std::complex<double>(0, 2.0)) - 1.0) / std::complex<double>(0, 2.0);
  EXPECT_NEAR(std::abs(u - expect), 0.0, 1e-15);
  // Cauchy location shift
  EXPECT_NEAR(std::abs(cf_eval(D::cauchy(0.5, 0.8), 1.5) - std::exp(std::complex<double>(-0.8 * 1.5, 0.75))), 0.0, 1e-15);
}

TEST(CharacteristicFunction, HermitianAndBoundedOnGrid) {
  for (const auto& law : all_kinds()) {
    for (int i = 0; i < 1000; ++i) {
      const double t = -25.0 + 0.05 * i;
      const auto z = cf_eval(law, t);
      EXPECT_LE(std::abs(z), 1.0 + 1e-15);
      EXPECT_LE(std::abs(cf_eval(law, -t) - std::conj(z)), 1e-15);
    }
  }
}

TEST(CharacteristicFunction, StableTwoAgreesWithGaussian) {
  const auto s = D::stable(2.0, 1.3);
  const auto g = D::gaussian(0, std::sqrt(2.0) * 1.3);
  for (int i = 0; i < 1000; ++i) {
    const double t = -5.0 + 0.01 * i;
    EXPECT_NEAR(std::abs(cf_eval(s, t) - cf_eval(g, t)), 0.0, 1e-12);
  }
}

TEST(Density, SupBoundsDensityOnGrid) {
  for (const auto& law : {D::gaussian(0.3, 1.7), D::uniform(-1, 2), D::cauchy(0.5, 0.8), D::stable(1.0, 1.2),
                          D::stable(2.0, 0.5)}) {
    EXPECT_TRUE(law.has_closed_density());
    for (int i = 0; i <= 4000; ++i) EXPECT_LE(law.pdf(-10.0 + 0.005 * i), law.density_sup() * (1 + 1e-15));
  }
  EXPECT_DOUBLE_EQ(D::gaussian(0, 2).density_sup(), 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::pi)));
  EXPECT_DOUBLE_EQ(D::cauchy(0, 2).density_sup(), 1.0 / (2.0 * std::numbers::pi));
  EXPECT_DOUBLE_EQ(D::uniform(0, 4).density_sup(), 0.25);
}

TEST(Density, GeneralStableHasNoClosedDensity) {
  const auto law = D::stable(1.5, 1.0);
  EXPECT_FALSE(law.has_closed_density());
  EXPECT_THROW(law.pdf(0.0), CapabilityError);
  EXPECT_THROW(law.cdf(0.0), CapabilityError);
  // sup f = Gamma(1 + 1/alpha) / (pi scale)
  EXPECT_NEAR(law.density_sup(), std::tgamma(1.0 + 1.0 / 1.5) / std::numbers::pi, 1e-15);
}

// Oracles for the cf integral below are Gamma-function evaluations of
// int_0^inf e^{-c t^p} t^k dt = Gamma((k+1)/p) / (p c^{(k+1)/p}).
TEST(CfIntegrability, CauchyAlphaOne) {
  const double oracle = 2.0 * (std::tgamma(2.0) / 4.0 + std::tgamma(4.0) / 16.0);
  const auto r = cf_integrability(D::cauchy(0, 1), 1.0);
  ASSERT_TRUE(r.finite);
  EXPECT_NEAR(r.value, 1.25, 1e-9);
  EXPECT_NEAR(r.value, oracle, 1e-9);
}

TEST(CfIntegrability, GaussianAlphaTwo) {
  const double oracle = std::tgamma(1.5) + std::tgamma(2.5);
  const auto r = cf_integrability(D::gaussian(0, 1), 2.0);
  ASSERT_TRUE(r.finite);
  EXPECT_NEAR(r.value, 1.25 * std::sqrt(std::numbers::pi), 1e-9);
  EXPECT_NEAR(r.value, oracle, 1e-9);
}

TEST(CfIntegrability, StableOneEqualsCauchy) {
  EXPECT_NEAR(cf_integrability(D::stable(1.0, 1.0), 1.0).value, 1.25, 1e-9);
}

TEST(CfIntegrability, HeavyStableStillFinite) {
  // |phi|^2 = e^{-2 sqrt t}: substitute t = u^2.
  const double oracle = 4.0 * (std::tgamma(4.0) / 16.0 + std::tgamma(8.0) / 256.0);
  const auto r = cf_integrability(D::stable(0.5, 1.0), 1.0);
  ASSERT_TRUE(r.finite);
  EXPECT_NEAR(r.value / oracle, 1.0, 1e-8);
}

TEST(CfIntegrability, UniformDiverges) {
  EXPECT_FALSE(cf_integrability(D::uniform(0, 1), 2.0).finite);
  EXPECT_FALSE(cf_integrability(D::uniform(0, 1), 0.5).finite);
  EXPECT_THROW(cf_integrability(D::gaussian(0, 1), 0.0), ConfigError);
  EXPECT_THROW(cf_integrability(D::gaussian(0, 1), 2.1), ConfigError);
}

TEST(CfIntegrability, PartialIntegralsMonotoneInCutoff) {
  for (const auto& law : {D::gaussian(0, 1), D::cauchy(0, 1), D::uniform(0, 1)}) {
    double prev = 0.0;
    for (double T = 0.5; T < 200.0; T *= 1.5) {
      const double v = cf_integrability_partial(law, 1.0, T);
      EXPECT_GE(v, prev - 1e-12);
      prev = v;
    }
  }
}

TEST(Parseval, GaussianAndCauchy) {
  const auto g = parseval_check(D::gaussian(0, 1));
  EXPECT_NEAR(g.lhs, std::sqrt(std::numbers::pi), 1e-10);
  EXPECT_NEAR(g.rhs, std::sqrt(std::numbers::pi), 1e-10);
  EXPECT_LT(g.relative_gap, 1e-8);
  const auto c = parseval_check(D::cauchy(0, 1));
  EXPECT_NEAR(c.lhs, 1.0, 1e-10);
  EXPECT_NEAR(c.rhs, 1.0, 1e-10);
  EXPECT_LT(c.relative_gap, 1e-8);
  EXPECT_LT(parseval_check(D::gaussian(1.0, 0.3)).relative_gap, 1e-6);
  EXPECT_LT(parseval_check(D::cauchy(-2.0, 3.0)).relative_gap, 1e-6);
}

TEST(Parseval, UniformConvergesSlowly) {
  QuadratureSpec q;
  q.cutoff = 1e4;
  const auto u = parseval_check(D::uniform(0, 1), q);
  EXPECT_NEAR(u.rhs, 2.0 * std::numbers::pi, 1e-9);
  EXPECT_LT(u.relative_gap, 1e-3);
}
