#pragma once

/// @file
/// Physical dependence measures ||X_k - X_k*||_alpha from coupled paths,
/// one-step characteristic-function distances, and summability diagnostics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "osclab/error.hpp"
#include "osclab/innovations.hpp"
#include "osclab/parallel.hpp"
#include "osclab/process_models.hpp"
#include "osclab/quadrature.hpp"
#include "osclab/rng.hpp"
#include "osclab/stats.hpp"

namespace osclab {

/// R coupled replicates up to horizon K, stored row-major (replicate, lag).
struct CouplingSample {
  std::size_t horizon = 0;
  std::size_t replicates = 0;
  std::vector<double> output_diff;  ///< X_k - X_k*
  std::vector<double> state_diff;   ///< Y_{k-1} - Y*_{k-1}

  double output(std::size_t r, std::size_t k) const { return output_diff[r * (horizon + 1) + k]; }
  double state(std::size_t r, std::size_t k) const { return state_diff[r * (horizon + 1) + k]; }
};

/// Replicate r uses the substream (master, kCoupling, r), so the result does
/// not depend on the thread count.
inline CouplingSample coupling_sample(const ProcessModel& model, std::size_t horizon, std::size_t replicates,
                                      std::uint64_t master, std::size_t threads = 0) {
  CouplingSample s;
  s.horizon = horizon;
  s.replicates = replicates;
  const std::size_t w = horizon + 1;
  s.output_diff.resize(replicates * w);
  s.state_diff.resize(replicates * w);
  parallel_for(replicates, threads, [&](std::size_t r) {
    Stream stream(master, {static_cast<std::uint64_t>(StreamTag::kCoupling), r});
    const auto c = simulate_coupled(model, horizon, stream);
    for (std::size_t k = 0; k <= horizon; ++k) {
      s.output_diff[r * w + k] = c.primary[k] - c.starred[k];
      s.state_diff[r * w + k] = c.states[k] - c.starred_states[k];
    }
  });
  return s;
}

namespace detail {

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("alpha", "must lie in (0, 2]");
}

inline void check_replicates(std::size_t R) {
  if (R < 100) throw ConfigError("replicates", "at least 100 coupled replicates are required");
}

}  // namespace detail

struct PdmEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  bool unreliable = false;  ///< alpha at or beyond the innovation tail index: the moment is infinite
};

namespace detail {

inline PdmEstimate pdm_from_sample(const CouplingSample& s, std::size_t k, double alpha, double tail_index) {
  std::vector<double> p(s.replicates);
  for (std::size_t r = 0; r < s.replicates; ++r) p[r] = std::pow(std::abs(s.output(r, k)), alpha);
  PdmEstimate e;
  e.unreliable = alpha >= tail_index;
  const double m = stats::mean(p);
  if (m == 0.0) return e;
  const double sd = stats::stddev(p);
  e.estimate = std::pow(m, 1.0 / alpha);
  // delta method for m^{1/alpha}
  e.stderr_ = e.estimate / (alpha * m) * sd / std::sqrt(static_cast<double>(s.replicates));
  return e;
}

}  // namespace detail

/// (mean over R coupled replicates of |X_k - X_k*|^alpha)^{1/alpha}.
inline PdmEstimate estimate_pdm(const ProcessModel& model, std::size_t k, double alpha, std::size_t R, Stream& stream,
                                std::size_t threads = 0) {
  detail::check_alpha(alpha);
  detail::check_replicates(R);
  const auto s = coupling_sample(model, k, R, stream.engine()(), threads);
  return detail::pdm_from_sample(s, k, alpha, model.innovation().tail_index());
}

// ---------------------------------------------------------------------------
// Summability verdicts

enum class Verdict { Summable, NotSummable, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Summable: return "summable";
    case Verdict::NotSummable: return "not_summable";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct TailFit {
  Verdict verdict = Verdict::Inconclusive;
  std::string law;  ///< "geometric", "power", "vanishing" or "" when no fit was usable
  stats::LinearFit fit;
};

/// Least-squares fits on log scale over the last ceil(K/2) lags of `values`
/// (indexed by lag 0..K). A geometric fit (log v against k) with negative
/// slope, or a power fit (log v against log k) with exponent below -1, is
/// read as summable; whichever fit has the larger R^2 decides, and
/// R^2 < 0.8 means inconclusive.
inline TailFit summability_verdict(std::span<const double> values) {
  TailFit out;
  const std::size_t K = values.size() - 1;
  const std::size_t first = K + 1 - (K + 1) / 2;
  std::size_t last_positive = 0;
  bool any = false;
  for (std::size_t k = first; k <= K; ++k)
    if (values[k] > 0.0) {
      last_positive = k;
      any = true;
    }
  if (!any || last_positive + 2 < K) {
    // The tail vanishes (a finite filter): the series is a finite sum.
    bool zero_tail = true;
    for (std::size_t k = (any ? last_positive + 1 : first); k <= K; ++k) zero_tail = zero_tail && values[k] == 0.0;
    if (zero_tail) {
      out.verdict = Verdict::Summable;
      out.law = "vanishing";
      return out;
    }
  }
  std::vector<double> k_lin, k_log, v_log;
  for (std::size_t k = std::max<std::size_t>(first, 1); k <= K; ++k) {
    if (!(values[k] > 0.0)) continue;
    k_lin.push_back(static_cast<double>(k));
    k_log.push_back(std::log(static_cast<double>(k)));
    v_log.push_back(std::log(values[k]));
  }
  if (v_log.size() < 3) return out;
  const auto geo = stats::ols(k_lin, v_log);
  const auto pow = stats::ols(k_log, v_log);
  const bool use_geo = geo.r_squared >= pow.r_squared;
  out.fit = use_geo ? geo : pow;
  out.law = use_geo ? "geometric" : "power";
  if (out.fit.r_squared < 0.8) {
    out.verdict = Verdict::Inconclusive;
  } else if (use_geo) {
    out.verdict = geo.slope < 0.0 ? Verdict::Summable : Verdict::NotSummable;
  } else {
    out.verdict = pow.slope < -1.0 ? Verdict::Summable : Verdict::NotSummable;
  }
  return out;
}

struct DependenceProfile {
  double alpha = 2.0;
  std::vector<std::size_t> lags;
  std::vector<double> pdm;
  std::vector<double> pdm_stderr;
  std::vector<double> pdm_pow;        ///< pdm^{alpha/2}
  std::vector<double> partial_sums;   ///< cumulative sums of pdm_pow
  std::vector<double> cf_terms;       ///< filled by condition29_partial_sum when available
  stats::LinearFit decay_fit;         ///< log pdm against k over lags 1..K with pdm > 0
  TailFit tail;
  bool unreliable = false;
};

inline DependenceProfile pdm_summability(const ProcessModel& model, double alpha, std::size_t K, std::size_t R,
                                         Stream& stream, std::size_t threads = 0) {
  detail::check_alpha(alpha);
  detail::check_replicates(R);
  if (K < 4) throw ConfigError("lags", "at least 4 lags are required");
  const auto s = coupling_sample(model, K, R, stream.engine()(), threads);
  const double tail_index = model.innovation().tail_index();
  DependenceProfile p;
  p.alpha = alpha;
  double cum = 0.0;
  std::vector<double> kx, ly;
  for (std::size_t k = 0; k <= K; ++k) {
    const auto e = detail::pdm_from_sample(s, k, alpha, tail_index);
    p.lags.push_back(k);
    p.pdm.push_back(e.estimate);
    p.pdm_stderr.push_back(e.stderr_);
    p.pdm_pow.push_back(std::pow(e.estimate, alpha / 2.0));
    cum += p.pdm_pow.back();
    p.partial_sums.push_back(cum);
    p.unreliable = p.unreliable || e.unreliable;
    if (k >= 1 && e.estimate > 0.0) {
      kx.push_back(static_cast<double>(k));
      ly.push_back(std::log(e.estimate));
    }
  }
  if (kx.size() >= 2) p.decay_fit = stats::ols(kx, ly);
  p.tail = summability_verdict(p.pdm_pow);
  return p;
}

// ---------------------------------------------------------------------------
// One-step characteristic-function distances

namespace detail {

inline InnovationDistribution additive_step_law(const ProcessModel& model) {
  if (!model.additive())
    throw CapabilityError("model '" + to_string(model.kind()) + "' has no additive one-step form X_k = e_k + Y_{k-1}");
  return model.step_law();
}

// mean over replicates of |e^{i theta Y} - e^{i theta Y*}|^2 = 2 - 2 cos(theta (Y - Y*))
inline double mean_chord_sq(const CouplingSample& s, std::size_t k, double theta) {
  double acc = 0.0;
  for (std::size_t r = 0; r < s.replicates; ++r) acc += 2.0 - 2.0 * std::cos(theta * s.state(r, k));
  return acc / static_cast<double>(s.replicates);
}

}  // namespace detail

/// || phi_1(theta | xi_{k-1}) - phi_1(theta | xi*_{k-1}) ||_2, estimated as
/// |phi(theta)| (mean of |e^{i theta Y} - e^{i theta Y*}|^2)^{1/2} over R
/// coupled states, phi being the cf of the additive innovation.
inline double cf_distance_onestep(const ProcessModel& model, std::size_t k, double theta, std::size_t R,
                                  Stream& stream, std::size_t threads = 0) {
  const auto law = detail::additive_step_law(model);
  const auto s = coupling_sample(model, k, R, stream.engine()(), threads);
  return std::sqrt(law.cf_abs2(theta)) * std::sqrt(detail::mean_chord_sq(s, k, theta));
}

struct Condition29Result {
  double alpha = 2.0;
  double cutoff = 0.0;
  std::vector<std::size_t> lags;
  std::vector<double> terms;         ///< [int (1+t^2) dist_k(t)^2 dt]^{1/2}
  std::vector<double> bounds;        ///< 2 [int (1+t^2) |phi(t)|^2 E|t D_k|^alpha dt]^{1/2}
  std::vector<double> partial_sums;  ///< cumulative sums of terms
  TailFit tail;
};

/// Terms of the one-step cf summability series for lags 0..K.
///
/// Every term and its moment bound are computed on the same fixed composite
/// Gauss-Kronrod rule over [-T, T] with the same coupled states, so the
/// pointwise inequality |e^{ia} - e^{ib}|^2 <= 4 |a - b|^alpha carries over
/// to the quadrature sums exactly.
inline Condition29Result condition29_partial_sum(const ProcessModel& model, std::size_t K, const QuadratureSpec& quad,
                                                 std::size_t R, Stream& stream, double alpha = 2.0,
                                                 std::size_t threads = 0) {
  detail::check_alpha(alpha);
  detail::check_replicates(R);
  const auto law = detail::additive_step_law(model);
  const auto integrability = cf_integrability(law, alpha, quad);
  if (!integrability.finite)
    throw CapabilityError("the cf integral of |phi|^2 (1+t^2) |t|^alpha diverges for the " +
                          to_string(law.kind()) + " innovation; the one-step cf series is not defined");
  Condition29Result out;
  out.alpha = alpha;
  out.cutoff = integrability.cutoff;

  const double unit = 1.0 / law.scale();
  const auto breaks = panel_breaks(out.cutoff, 0.05 * unit, 64.0 * unit);
  const auto rule = composite_kronrod(breaks);
  std::vector<double> weight(rule.nodes.size());
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double t = rule.nodes[q];
    weight[q] = 2.0 * rule.weights[q] * (1.0 + t * t) * law.cf_abs2(t);  // even integrand
  }

  const auto s = coupling_sample(model, K, R, stream.engine()(), threads);
  out.terms.resize(K + 1);
  out.bounds.resize(K + 1);
  parallel_for(K + 1, threads, [&](std::size_t k) {
    double sq = 0.0, moment = 0.0;
    double abs_alpha = 0.0;
    for (std::size_t r = 0; r < s.replicates; ++r) abs_alpha += std::pow(std::abs(s.state(r, k)), alpha);
    abs_alpha /= static_cast<double>(s.replicates);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double t = rule.nodes[q];
      sq += weight[q] * detail::mean_chord_sq(s, k, t);
      moment += weight[q] * std::pow(t, alpha) * abs_alpha;
    }
    out.terms[k] = std::sqrt(sq);
    out.bounds[k] = 2.0 * std::sqrt(moment);
  });
  double cum = 0.0;
  for (std::size_t k = 0; k <= K; ++k) {
    out.lags.push_back(k);
    cum += out.terms[k];
    out.partial_sums.push_back(cum);
  }
  out.tail = summability_verdict(out.terms);
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic inequalities

struct BoundChain {
  double lhs = 0.0;  ///< |e^{ia} - e^{ib}|
  double mid = 0.0;  ///< min(2, |a - b|)
  double rhs = 0.0;  ///< 2 |a - b|^{alpha/2}
  bool holds = true;
};

/// |e^{ia} - e^{ib}| <= min(2, |a-b|) <= 2 min(1, |a-b|) <= 2 |a-b|^{alpha/2}.
inline BoundChain bound_chain_check(double a, double b, double alpha = 2.0) {
  detail::check_alpha(alpha);
  const double d = std::abs(a - b);
  BoundChain c;
  c.lhs = 2.0 * std::abs(std::sin(0.5 * d));
  c.mid = std::min(2.0, d);
  c.rhs = 2.0 * std::pow(d, alpha / 2.0);
  c.holds = c.lhs <= c.mid && c.mid <= c.rhs;
  return c;
}

// ---------------------------------------------------------------------------
// ||e_0 - e'_0||_alpha

struct NormValue {
  double value = 0.0;
  double stderr_ = 0.0;
  bool closed_form = false;
  bool finite_moment = true;
};

/// Gaussian laws in closed form; anything else by a 10^6-draw Monte Carlo
/// oracle computed once per (law, alpha) and cached.
inline NormValue epsilon_difference_norm(const InnovationDistribution& dist, double alpha) {
  detail::check_alpha(alpha);
  NormValue out;
  out.finite_moment = alpha < dist.tail_index();
  if (dist.kind() == InnovationKind::Gaussian ||
      (dist.kind() == InnovationKind::SymmetricAlphaStable && dist.param1() == 2.0)) {
    // e - e' ~ N(0, 2 sd^2); E|Z|^a = 2^{a/2} Gamma((a+1)/2) / sqrt(pi)
    const double sd = dist.kind() == InnovationKind::Gaussian ? dist.param2() : std::sqrt(2.0) * dist.param2();
    const double abs_moment = std::pow(2.0, alpha / 2.0) * std::tgamma((alpha + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
    out.value = std::sqrt(2.0) * sd * std::pow(abs_moment, 1.0 / alpha);
    out.closed_form = true;
    return out;
  }
  static std::mutex mutex;
  static std::map<std::tuple<int, double, double, double>, NormValue> cache;
  const auto key = std::make_tuple(static_cast<int>(dist.kind()), dist.param1(), dist.param2(), alpha);
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  constexpr std::size_t kDraws = 1'000'000;
  Stream stream(0x9a11ce5eedULL, {static_cast<std::uint64_t>(StreamTag::kOracle)});
  std::vector<double> p(kDraws);
  for (auto& v : p) {
    const double e = dist.draw(stream);
    const double ep = dist.draw(stream);
    v = std::pow(std::abs(e - ep), alpha);
  }
  const double m = stats::mean(p);
  out.value = std::pow(m, 1.0 / alpha);
  out.stderr_ = out.value / (alpha * m) * stats::stddev(p) / std::sqrt(static_cast<double>(kDraws));
  cache.emplace(key, out);
  return out;
}

}  // namespace osclab
