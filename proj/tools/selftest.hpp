#pragma once

// Direct checks of closed-form identities and degenerate cases; each one is
// exact or nearly so and runs in milliseconds.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "osclab/decomposition.hpp"
#include "osclab/dependence.hpp"
#include "osclab/experiments.hpp"

namespace osclab::selftest {

struct Case {
  std::string name;
  std::function<bool()> run;
};

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline std::vector<Case> cases() {
  using D = InnovationDistribution;
  const std::vector<D> laws{D::gaussian(0, 1), D::uniform(0, 1), D::cauchy(0, 1), D::stable(1.5, 1)};
  std::vector<Case> c;
  c.push_back({"cf(0) = 1 for every kind", [=] {
                 for (const auto& d : laws)
                   if (cf_eval(d, 0.0) != std::complex<double>(1.0, 0.0)) return false;
                 return true;
               }});
  c.push_back({"cf Hermitian and bounded by 1", [=] {
                 for (const auto& d : laws)
                   for (int i = -500; i < 500; ++i) {
                     const double t = 0.037 * i;
                     const auto z = cf_eval(d, t);
                     if (std::abs(z) > 1.0 + 1e-15 || std::abs(cf_eval(d, -t) - std::conj(z)) > 1e-15) return false;
                   }
                 return true;
               }});
  c.push_back({"Gaussian cf(1) = exp(-1/2)",
               [] { return near(cf_eval(D::gaussian(0, 1), 1.0).real(), std::exp(-0.5), 1e-15); }});
  c.push_back({"stable(1.5) cf(2) = exp(-2^1.5)",
               [] { return near(cf_eval(D::stable(1.5, 1), 2.0).real(), std::exp(-std::pow(2.0, 1.5)), 1e-15); }});
  c.push_back({"edf of (1,2,3)", [] {
                 SortedSample s({3.0, 1.0, 2.0});
                 return edf_eval(s, 2.0) == 2.0 / 3.0 && edf_eval(s, 0.5) == 0.0 && edf_eval(s, 3.0) == 1.0;
               }});
  c.push_back({"iid path equals its innovations", [] {
                 const auto law = D::uniform(0, 1);
                 Stream a(7), b(7);
                 const auto path = simulate_path(ProcessModel::iid(law), 4, a);
                 for (double v : path)
                   if (v != law.draw(b)) return false;
                 return true;
               }});
  c.push_back({"linear a=(1) path equals its innovations", [] {
                 const auto law = D::gaussian(0, 1);
                 Stream a(11), b(11);
                 const auto path = simulate_path(ProcessModel::linear({1.0}, law), 16, a);
                 for (double v : path)
                   if (v != law.draw(b)) return false;
                 return true;
               }});
  c.push_back({"iid coupling leaves X_k unchanged for k >= 1", [] {
                 Stream s(3);
                 const auto cp = simulate_coupled(ProcessModel::iid(D::gaussian(0, 1)), 8, s);
                 for (std::size_t k = 1; k <= 8; ++k)
                   if (cp.primary[k] != cp.starred[k]) return false;
                 return true;
               }});
  c.push_back({"Gaussian conditional cdf at x = Y is 1/2", [] {
                 return conditional_cdf(ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1)), 1.0, 1.0) == 0.5;
               }});
  c.push_back({"iid uniform marginal cdf(0.3) = 0.3", [] {
                 const auto m = build_marginal(ProcessModel::iid(D::uniform(0, 1)));
                 return near(marginal_cdf(m, 0.3), 0.3, 1e-15);
               }});
  c.push_back({"modulus at tiny b is at least one jump", [] {
                 SortedSample s({0.1, 0.4, 0.7, 0.9});
                 const ClosedFormCdf F(D::uniform(0, 1));
                 return oscillation_modulus(s, 1e-12, F) >= std::sqrt(4.0) / 4.0 - 1e-12;
               }});
  c.push_back({"bound chain at antipodal and equal points", [] {
                 const auto a = bound_chain_check(std::numbers::pi, 0.0);
                 const auto z = bound_chain_check(1.0, 1.0);
                 return near(a.lhs, 2.0, 1e-15) && a.mid == 2.0 && a.holds && z.lhs == 0.0 && z.holds;
               }});
  c.push_back({"iota(e^4) = 2 log 4", [] { return near(iota(std::exp(4.0)), 2.0 * std::log(4.0), 1e-12); }});
  c.push_back({"Kolmogorov check of H = 0", [] {
                 std::vector<double> z(101, 0.0);
                 const auto k = kolmogorov_check(z, z, 0.1, 1.0);
                 return k.sup_sq == 0.0 && k.bound == 0.0 && k.taikov_bound == 0.0;
               }});
  c.push_back({"iid dependence measure vanishes beyond lag 0", [] {
                 Stream s(5);
                 return estimate_pdm(ProcessModel::iid(D::gaussian(0, 1)), 5, 2.0, 100, s).estimate == 0.0;
               }});
  c.push_back({"one-step cf distance vanishes at theta = 0", [] {
                 Stream s(5);
                 return cf_distance_onestep(ProcessModel::threshold_ar(0.5, -0.3, D::gaussian(0, 1)), 2, 0.0, 100, s) == 0.0;
               }});
  c.push_back({"b_n = 1/log n fails the calibration regime", [] {
                 std::vector<std::size_t> n{1 << 10, 1 << 12, 1 << 14};
                 return !check_stute_regime(n, bandwidths(BandwidthRule::inverse_log(), n)).ok;
               }});
  c.push_back({"iid smooth part vanishes", [] {
                 const auto model = ProcessModel::iid(D::gaussian(0, 1));
                 const auto m = build_marginal(model);
                 Stream s(9);
                 const auto path = simulate_path_with_states(model, 256, s);
                 const auto d = decompose(path, model, m, default_decomposition_grid(m, 256));
                 const auto sb = smooth_part_modulus_bound(d, 0.1);
                 return sb.lhs == 0.0 && sb.rhs == 0.0;
               }});
  return c;
}

}  // namespace osclab::selftest
