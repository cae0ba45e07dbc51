#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>

#include "osclab/process_models.hpp"
#include "osclab/stats.hpp"

using namespace osclab;
using D = InnovationDistribution;

namespace {

std::vector<double> geometric(double rho, std::size_t L) {
  std::vector<double> a(L);
  for (std::size_t k = 0; k < L; ++k) a[k] = std::pow(rho, static_cast<double>(k));
  return a;
}

double lag1_autocorrelation(const std::vector<double>& x) {
  const double m = stats::mean(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - m) * (x[i] - m);
    if (i + 1 < x.size()) num += (x[i] - m) * (x[i + 1] - m);
  }
  return num / den;
}

}  // namespace

TEST(Simulate, IidPathIsTheInnovationDraws) {
  const auto law = D::uniform(0, 1);
  Stream a(11), b(11);
  const auto path = simulate_path(ProcessModel::iid(law), 4, a);
  ASSERT_EQ(path.size(), 4u);
  for (double x : path) EXPECT_EQ(x, law.draw(b));
}

TEST(Simulate, UnitFilterReproducesInnovations) {
  const auto law = D::gaussian(0, 1);
  Stream a(12), b(12);
  const auto path = simulate_path(ProcessModel::linear({1.0}, law), 100, a);
  for (double x : path) EXPECT_EQ(x, law.draw(b));
}

TEST(Simulate, TarLagOneAutocorrelation) {
  Stream s(13);
  const auto x = simulate_path(ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1)), 100000, s);
  const double r = lag1_autocorrelation(x);
  EXPECT_GT(r, 0.0);
  EXPECT_LT(r, 0.6);
}

TEST(Simulate, LinearAutocorrelationMatchesFilter) {
  // corr(X_k, X_{k+1}) = sum a_i a_{i+1} / sum a_i^2 = 0.48 for a = (0.8, 0.6).
  Stream s(14);
  const auto x = simulate_path(ProcessModel::linear({0.8, 0.6}, D::gaussian(0, 1)), 200000, s);
  EXPECT_NEAR(lag1_autocorrelation(x), 0.48, 0.015);
}

TEST(Simulate, StatesSatisfyTheAdditiveIdentity) {
  const auto law = D::gaussian(0, 1);
  for (const auto& model : {ProcessModel::linear({0.8, 0.6, 0.3}, law), ProcessModel::threshold_ar(0.5, -0.3, law),
                            ProcessModel::recursive(named_recursive_map("tanh", 0.8), law)}) {
    Stream a(15), b(15);
    const auto p = simulate_path_with_states(model, 500, a);
    if (model.kind() == ModelKind::Linear) {
      // the filter pre-draws its L - 1 initial innovations
      for (std::size_t i = 0; i + 1 < model.coeffs().size(); ++i) law.draw(b);
    } else {
      for (std::size_t i = 0; i < model.burn_in(); ++i) law.draw(b);
    }
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double e = law.draw(b);
      EXPECT_DOUBLE_EQ(p.values[i], model.innovation_coefficient() * e + p.states[i]);
    }
  }
}

TEST(Simulate, ExplicitBurnInIsHonored) {
  const auto m = ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1), 7);
  EXPECT_EQ(m.burn_in(), 7u);
  EXPECT_EQ(ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1)).burn_in(), default_burn_in(0.5));
  EXPECT_LT(std::pow(0.5, static_cast<double>(default_burn_in(0.5))), 1e-26);
}

TEST(Model, InvalidParametersAreConfigErrors) {
  const auto g = D::gaussian(0, 1);
  EXPECT_THROW(ProcessModel::threshold_ar(1.0, 0.0, g), ConfigError);
  EXPECT_THROW(ProcessModel::threshold_ar(0.0, -1.2, g), ConfigError);
  EXPECT_THROW(ProcessModel::linear({}, g), ConfigError);
  EXPECT_THROW(ProcessModel::recursive(named_recursive_map("tanh", 1.0), g), ConfigError);
  EXPECT_THROW(named_recursive_map("cube", 0.5), ConfigError);
  Stream s(1);
  EXPECT_THROW(simulate_path(ProcessModel::iid(g), 0, s), ConfigError);
}

TEST(Coupling, IidOutputsCoincideAfterTimeZero) {
  Stream s(21);
  const auto c = simulate_coupled(ProcessModel::iid(D::gaussian(0, 1)), 10, s);
  EXPECT_NE(c.primary[0], c.starred[0]);
  for (std::size_t k = 1; k <= 10; ++k) EXPECT_EQ(c.primary[k], c.starred[k]);
}

TEST(Coupling, LinearDifferenceIsCoefficientTimesEpsilonGap) {
  const std::vector<double> a{1.0, 0.5, -0.25, 0.125};
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    Stream s(seed);
    const auto c = simulate_coupled(ProcessModel::linear(a, D::gaussian(0, 1)), 8, s);
    const double gap = c.eps0 - c.eps0_prime;
    for (std::size_t k = 0; k <= 8; ++k) {
      const double expect = k < a.size() ? a[k] * gap : 0.0;
      EXPECT_NEAR(c.primary[k] - c.starred[k], expect, 1e-14 * (1.0 + std::abs(gap)));
    }
  }
}

TEST(Coupling, TarContractsPathwise) {
  const auto m = ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1));
  for (std::uint64_t seed = 40; seed < 140; ++seed) {
    Stream s(seed);
    const auto c = simulate_coupled(m, 20, s);
    const double d0 = std::abs(c.primary[0] - c.starred[0]);
    for (std::size_t k = 1; k <= 20; ++k)
      EXPECT_LE(std::abs(c.primary[k] - c.starred[k]), std::pow(0.5, static_cast<double>(k)) * d0 + 1e-12);
  }
}

TEST(Coupling, CopiesHaveIdenticalMarginals) {
  const auto m = ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1));
  for (std::size_t k : {0u, 1u, 3u}) {
    std::vector<double> x, xs;
    for (std::uint64_t r = 0; r < 10000; ++r) {
      Stream s(777, {r});
      const auto c = simulate_coupled(m, k, s);
      x.push_back(c.primary[k]);
      xs.push_back(c.starred[k]);
    }
    std::sort(x.begin(), x.end());
    std::sort(xs.begin(), xs.end());
    EXPECT_LT(stats::ks_two_sample(x, xs), stats::ks_critical_two_sample(x.size(), xs.size(), 0.01)) << "k=" << k;
  }
}

TEST(Stationarity, HalvesOfALongPathAgree) {
  Stream s(50);
  const auto x = simulate_path(ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1)), 200000, s);
  std::vector<double> a(x.begin(), x.begin() + 100000), b(x.begin() + 100000, x.end());
  // iid critical value inflated by sqrt(long-run variance factor (1 + r) / (1 - r)) with r <= 0.6.
  const double inflate = std::sqrt(1.6 / 0.4);
  EXPECT_NEAR(stats::mean(a), stats::mean(b), inflate * 4.0 * std::sqrt(2.0 / 1e5) * stats::stddev(x));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_LT(stats::ks_two_sample(a, b), inflate * stats::ks_critical_two_sample(a.size(), b.size(), 0.01));
}

TEST(Conditional, OneStepLaws) {
  const auto g = ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1));
  EXPECT_DOUBLE_EQ(conditional_cdf(g, 1.0, 1.0), 0.5);
  EXPECT_NEAR(conditional_density(g, 1.0, 1.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_DOUBLE_EQ(conditional_density_bound(g), 1.0 / std::sqrt(2.0 * std::numbers::pi));
  // a_0 = 2 doubles the one-step scale
  const auto lin = ProcessModel::linear({2.0, 0.5}, D::cauchy(0, 1));
  EXPECT_NEAR(conditional_cdf(lin, 2.0 + 0.3, 0.3), 0.75, 1e-15);
  EXPECT_NEAR(conditional_density_bound(lin), 1.0 / (2.0 * std::numbers::pi), 1e-15);
}

TEST(Conditional, CapabilityErrors) {
  EXPECT_THROW(conditional_cdf(ProcessModel::linear({0.0, 1.0}, D::gaussian(0, 1)), 0.0, 0.0), CapabilityError);
  EXPECT_THROW(conditional_cdf(ProcessModel::iid(D::stable(1.5, 1.0)), 0.0, 0.0), CapabilityError);
}

TEST(Marginal, ClosedFormCases) {
  const auto lin = build_marginal(ProcessModel::linear({0.8, 0.6}, D::gaussian(0, 1)));
  EXPECT_EQ(lin.mode(), Marginal::Mode::ClosedForm);
  EXPECT_DOUBLE_EQ(marginal_cdf(lin, 0.0), 0.5);
  EXPECT_NEAR(marginal_cdf(lin, 1.0), 0.5 * std::erfc(-1.0 / std::sqrt(2.0)), 1e-15);

  EXPECT_DOUBLE_EQ(marginal_cdf(build_marginal(ProcessModel::iid(D::uniform(0, 1))), 0.3), 0.3);

  const auto a = geometric(0.5, 30);
  const double scale = std::accumulate(a.begin(), a.end(), 0.0);
  const auto cau = build_marginal(ProcessModel::linear(a, D::cauchy(0, 1)));
  EXPECT_DOUBLE_EQ(marginal_cdf(cau, 0.0), 0.5);
  EXPECT_NEAR(marginal_cdf(cau, scale), 0.75, 1e-14);
  EXPECT_EQ(cau.reference_error(1000), 0.0);
}

TEST(Marginal, MixtureReferenceMatchesIndependentEdf) {
  const auto m = ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1));
  MarginalOptions opt;
  opt.reference_size = 200000;
  opt.seed = 99;
  const auto F = build_marginal(m, opt);
  ASSERT_EQ(F.mode(), Marginal::Mode::MixtureReference);
  EXPECT_TRUE(F.has_density());
  Stream s(5150);
  auto x = simulate_path(m, 200000, s);
  std::sort(x.begin(), x.end());
  const double ks = stats::ks_statistic(x, [&](double v) { return F.cdf(v); });
  // both sides carry dependent-sample error of order 1/sqrt(2e5) ~ 0.0022
  EXPECT_LT(ks, 0.012);
  EXPECT_NEAR(F.reference_error(1 << 12), std::sqrt(4096.0 / 200000.0), 1e-15);
}

TEST(Marginal, HeavyTailedRecursiveUsesEmpiricalReference) {
  const auto m = ProcessModel::recursive(named_recursive_map("tanh", 0.8), D::stable(1.5, 1.0));
  MarginalOptions opt;
  opt.reference_size = 50000;
  const auto F = build_marginal(m, opt);
  EXPECT_EQ(F.mode(), Marginal::Mode::EmpiricalReference);
  EXPECT_FALSE(F.has_density());
  double prev = 0.0;
  for (double x = -20; x <= 20; x += 0.25) {
    EXPECT_GE(F.cdf(x), prev);
    prev = F.cdf(x);
  }
  // tanh map is odd and the innovation symmetric
  EXPECT_NEAR(F.cdf(0.0), 0.5, 0.02);
}

TEST(Marginal, CacheRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "osclab_test_marginal_cache.bin";
  std::filesystem::remove(path);
  const auto m = ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1));
  MarginalOptions opt;
  opt.reference_size = 20000;
  opt.cache = path;
  const auto first = build_marginal(m, opt);
  ASSERT_TRUE(std::filesystem::exists(path));
  EXPECT_EQ(load_reference_sample(path).size(), 20000u);
  opt.seed = 12345;  // ignored when the cache exists
  const auto second = build_marginal(m, opt);
  for (double x = -3; x <= 3; x += 0.1) EXPECT_EQ(first.cdf(x), second.cdf(x));
  opt.reference_size = 30000;
  EXPECT_THROW(build_marginal(m, opt), ConfigError);
  std::filesystem::remove(path);
}

TEST(Marginal, QuantileInvertsCdf) {
  const auto F = build_marginal(ProcessModel::iid(D::gaussian(1, 2)));
  for (double p : {0.001, 0.25, 0.5, 0.9}) EXPECT_NEAR(F.cdf(F.quantile(p)), p, 1e-12);
}
