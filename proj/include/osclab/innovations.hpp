#pragma once

/// @file
/// Innovation laws: sampling, densities, CDFs, characteristic functions and
/// the characteristic-function functionals used by the dependence conditions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "osclab/error.hpp"
#include "osclab/quadrature.hpp"
#include "osclab/rng.hpp"

namespace osclab {

enum class InnovationKind { Gaussian, Uniform, Cauchy, SymmetricAlphaStable };

inline std::string to_string(InnovationKind k) {
  switch (k) {
    case InnovationKind::Gaussian: return "gaussian";
    case InnovationKind::Uniform: return "uniform";
    case InnovationKind::Cauchy: return "cauchy";
    case InnovationKind::SymmetricAlphaStable: return "stable";
  }
  return "unknown";
}

/// An iid innovation law. Immutable value type.
///
/// Parameters by kind:
///   Gaussian(mean, sd), Uniform(lo, hi), Cauchy(loc, scale),
///   SymmetricAlphaStable(alpha, scale) with cf exp(-(scale |t|)^alpha).
/// Stable laws with alpha in {1, 2} are Cauchy(0, scale) and
/// Gaussian(0, sqrt(2) scale); other indices have no closed-form density here.
class InnovationDistribution {
 public:
  static InnovationDistribution gaussian(double mean, double sd) {
    if (!(sd > 0.0) || !std::isfinite(sd)) throw ConfigError("innovation.sd", "must be positive and finite");
    if (!std::isfinite(mean)) throw ConfigError("innovation.mean", "must be finite");
    return {InnovationKind::Gaussian, mean, sd};
  }
  static InnovationDistribution uniform(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("innovation.lo", "bounds must be finite");
    if (!(lo < hi)) throw ConfigError("innovation.hi", "requires lo < hi");
    return {InnovationKind::Uniform, lo, hi};
  }
  static InnovationDistribution cauchy(double loc, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("innovation.scale", "must be positive and finite");
    if (!std::isfinite(loc)) throw ConfigError("innovation.loc", "must be finite");
    return {InnovationKind::Cauchy, loc, scale};
  }
  static InnovationDistribution stable(double alpha, double scale) {
    if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("innovation.alpha", "must lie in (0, 2]");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("innovation.scale", "must be positive and finite");
    return {InnovationKind::SymmetricAlphaStable, alpha, scale};
  }

  InnovationKind kind() const noexcept { return kind_; }
  double param1() const noexcept { return p1_; }
  double param2() const noexcept { return p2_; }

  bool has_closed_density() const noexcept {
    return kind_ != InnovationKind::SymmetricAlphaStable || p1_ == 1.0 || p1_ == 2.0;
  }

  /// Tail index: +inf for laws with all moments.
  double tail_index() const noexcept {
    switch (kind_) {
      case InnovationKind::Cauchy: return 1.0;
      case InnovationKind::SymmetricAlphaStable:
        return p1_ == 2.0 ? std::numeric_limits<double>::infinity() : p1_;
      default: return std::numeric_limits<double>::infinity();
    }
  }

  bool light_tailed() const noexcept { return std::isinf(tail_index()); }

  /// Center of symmetry (midpoint for the uniform law).
  double center() const noexcept {
    switch (kind_) {
      case InnovationKind::Uniform: return 0.5 * (p1_ + p2_);
      case InnovationKind::SymmetricAlphaStable: return 0.0;
      default: return p1_;
    }
  }

  /// A characteristic length: sd, scale, or width.
  double scale() const noexcept {
    switch (kind_) {
      case InnovationKind::Uniform: return p2_ - p1_;
      default: return p2_;
    }
  }

  /// Law of c * eps for c != 0.
  InnovationDistribution scaled(double c) const {
    if (c == 0.0 || !std::isfinite(c)) throw ConfigError("coeffs", "innovation coefficient must be nonzero");
    const double a = std::abs(c);
    switch (kind_) {
      case InnovationKind::Gaussian: return gaussian(c * p1_, a * p2_);
      case InnovationKind::Uniform: return uniform(std::min(c * p1_, c * p2_), std::max(c * p1_, c * p2_));
      case InnovationKind::Cauchy: return cauchy(c * p1_, a * p2_);
      case InnovationKind::SymmetricAlphaStable: return stable(p1_, a * p2_);
    }
    return *this;
  }

  /// sup_x f(x), in closed form for every kind.
  double density_sup() const noexcept {
    using std::numbers::pi;
    switch (kind_) {
      case InnovationKind::Gaussian: return 1.0 / (p2_ * std::sqrt(2.0 * pi));
      case InnovationKind::Uniform: return 1.0 / (p2_ - p1_);
      case InnovationKind::Cauchy: return 1.0 / (pi * p2_);
      case InnovationKind::SymmetricAlphaStable: return std::tgamma(1.0 + 1.0 / p1_) / (pi * p2_);
    }
    return 0.0;
  }

  double cdf(double x) const {
    switch (closed_kind()) {
      case InnovationKind::Gaussian:
        return 0.5 * std::erfc(-(x - loc()) / (sd() * std::numbers::sqrt2));
      case InnovationKind::Uniform:
        return x <= p1_ ? 0.0 : x >= p2_ ? 1.0 : (x - p1_) / (p2_ - p1_);
      case InnovationKind::Cauchy:
        return 0.5 + std::atan((x - loc()) / sd()) / std::numbers::pi;
      default: throw CapabilityError("stable law with alpha not in {1, 2} has no closed-form CDF");
    }
  }

  double pdf(double x) const {
    using std::numbers::pi;
    switch (closed_kind()) {
      case InnovationKind::Gaussian: {
        const double z = (x - loc()) / sd();
        return std::exp(-0.5 * z * z) / (sd() * std::sqrt(2.0 * pi));
      }
      case InnovationKind::Uniform: return (x >= p1_ && x <= p2_) ? 1.0 / (p2_ - p1_) : 0.0;
      case InnovationKind::Cauchy: {
        const double z = (x - loc()) / sd();
        return 1.0 / (pi * sd() * (1.0 + z * z));
      }
      default: throw CapabilityError("stable law with alpha not in {1, 2} has no closed-form density");
    }
  }

  /// Closed-form characteristic function E exp(i t eps).
  std::complex<double> cf(double t) const {
    using namespace std::complex_literals;
    switch (kind_) {
      case InnovationKind::Gaussian:
        return std::exp(1i * (p1_ * t) - 0.5 * p2_ * p2_ * t * t);
      case InnovationKind::Cauchy: return std::exp(1i * (p1_ * t) - p2_ * std::abs(t));
      case InnovationKind::Uniform: {
        const double h = 0.5 * (p2_ - p1_);
        const double u = t * h;
        const double s = u == 0.0 ? 1.0 : std::sin(u) / u;
        return std::exp(1i * (center() * t)) * s;
      }
      case InnovationKind::SymmetricAlphaStable:
        return {std::exp(-std::pow(p2_ * std::abs(t), p1_)), 0.0};
    }
    return {1.0, 0.0};
  }

  /// |cf(t)|^2 without forming the complex value.
  double cf_abs2(double t) const {
    switch (kind_) {
      case InnovationKind::Gaussian: return std::exp(-p2_ * p2_ * t * t);
      case InnovationKind::Cauchy: return std::exp(-2.0 * p2_ * std::abs(t));
      case InnovationKind::Uniform: {
        const double u = 0.5 * t * (p2_ - p1_);
        const double s = u == 0.0 ? 1.0 : std::sin(u) / u;
        return s * s;
      }
      case InnovationKind::SymmetricAlphaStable: return std::exp(-2.0 * std::pow(p2_ * std::abs(t), p1_));
    }
    return 1.0;
  }

  /// argmax_x F(x + b) - F(x) for b > 0. All closed-form kinds are
  /// symmetric unimodal (or uniform), so the window gain is quasi-concave.
  double window_gain_argmax(double b) const {
    if (closed_kind() == InnovationKind::Uniform) return std::min(p1_, p2_ - b);
    return loc() - 0.5 * b;
  }

  /// Interval outside which the CDF is 0 or 1 to double precision
  /// (Gaussian: 9 sd). Infinite bounds for heavy-tailed laws.
  std::pair<double, double> effective_support() const {
    const double inf = std::numeric_limits<double>::infinity();
    switch (closed_kind()) {
      case InnovationKind::Gaussian: return {loc() - 9.0 * sd(), loc() + 9.0 * sd()};
      case InnovationKind::Uniform: return {p1_, p2_};
      default: return {-inf, inf};
    }
  }

  double draw(Stream& s) const {
    using std::numbers::pi;
    switch (kind_) {
      case InnovationKind::Gaussian: return p1_ + p2_ * s.normal();
      case InnovationKind::Uniform: return p1_ + (p2_ - p1_) * s.uniform_open();
      case InnovationKind::Cauchy: return p1_ + p2_ * std::tan(pi * (s.uniform_open() - 0.5));
      case InnovationKind::SymmetricAlphaStable: {
        // Chambers-Mallows-Stuck, symmetric case.
        const double v = pi * (s.uniform_open() - 0.5);
        const double w = s.exponential();
        const double a = p1_;
        if (a == 1.0) return p2_ * std::tan(v);
        const double x = std::sin(a * v) / std::pow(std::cos(v), 1.0 / a) *
                         std::pow(std::cos(v - a * v) / w, (1.0 - a) / a);
        return p2_ * x;
      }
    }
    return 0.0;
  }

  friend bool operator==(const InnovationDistribution&, const InnovationDistribution&) = default;

 private:
  InnovationDistribution(InnovationKind k, double p1, double p2) : kind_(k), p1_(p1), p2_(p2) {}

  // Kind used for closed-form evaluation; stable laws map to Cauchy / Gaussian.
  InnovationKind closed_kind() const noexcept {
    if (kind_ != InnovationKind::SymmetricAlphaStable) return kind_;
    if (p1_ == 1.0) return InnovationKind::Cauchy;
    if (p1_ == 2.0) return InnovationKind::Gaussian;
    return InnovationKind::SymmetricAlphaStable;
  }
  double loc() const noexcept { return kind_ == InnovationKind::SymmetricAlphaStable ? 0.0 : p1_; }
  double sd() const noexcept {
    if (kind_ != InnovationKind::SymmetricAlphaStable) return p2_;
    return p1_ == 2.0 ? std::numbers::sqrt2 * p2_ : p2_;
  }

  InnovationKind kind_;
  double p1_;
  double p2_;
};

inline std::vector<double> sample_innovations(const InnovationDistribution& dist, std::size_t n, Stream& stream) {
  if (n < 1) throw ConfigError("n", "must be at least 1");
  std::vector<double> out(n);
  for (auto& x : out) x = dist.draw(stream);
  return out;
}

inline std::complex<double> cf_eval(const InnovationDistribution& dist, double t) { return dist.cf(t); }

// ---------------------------------------------------------------------------
// Characteristic-function integrals

namespace detail {

// Envelope of an oscillating non-negative integrand on [T, 2T].
template <class F>
double envelope(const F& g, double T) {
  double e = 0.0;
  for (int k = 0; k < 64; ++k) e = std::max(e, g(T * (1.0 + k / 64.0)));
  return e;
}

struct CutoffChoice {
  double cutoff = 0.0;
  bool finite = true;
};

// Doubles T until the integrand envelope is negligible; declares divergence
// when the envelope stops decaying at large T.
// Laws whose cf decays exponentially always terminate; only polynomially
// decaying cfs (the uniform law) go through the trend test.
template <class F>
CutoffChoice choose_cutoff(const F& g, double unit, bool exponential_decay) {
  double peak = envelope(g, unit * 1e-3);
  double T = unit;
  std::vector<double> env{envelope(g, T)};
  peak = std::max(peak, env.back());
  for (int i = 0; i < 400; ++i) {
    if (env.back() <= 1e-17 * std::max(peak, 1e-300) || env.back() == 0.0) return {T, true};
    T *= 2.0;
    env.push_back(envelope(g, T));
    peak = std::max(peak, env.back());
    if (!exponential_decay && T >= 1024.0 * unit && env.size() >= 5 && env.back() >= 0.5 * env[env.size() - 5])
      return {T, false};
  }
  return {T, false};
}

inline bool oscillates(const InnovationDistribution& d) { return d.kind() == InnovationKind::Uniform; }

inline bool cf_decays_exponentially(const InnovationDistribution& d) { return !oscillates(d); }

template <class F>
QuadratureResult even_integral(const F& g, const InnovationDistribution& d, double T, const QuadratureSpec& spec) {
  const double unit = 1.0 / d.scale();
  const double width = oscillates(d) ? std::numbers::pi * unit : 0.5 * unit;
  const double uniform_end = oscillates(d) ? T : 64.0 * unit;
  const auto br = panel_breaks(T, width, uniform_end);
  auto r = integrate(g, std::span<const double>(br), spec);
  r.value *= 2.0;
  r.abs_error *= 2.0;
  return r;
}

}  // namespace detail

struct CfIntegrability {
  double value = 0.0;      ///< integral over [-T, T]
  double abs_error = 0.0;  ///< quadrature error estimate
  double cutoff = 0.0;     ///< T used
  bool finite = true;      ///< false: integrand does not decay, the integral diverges
};

/// The integral of |cf(t)|^2 (1 + t^2) |t|^alpha over the real line.
inline CfIntegrability cf_integrability(const InnovationDistribution& dist, double alpha,
                                        const QuadratureSpec& quad = {}) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("alpha", "must lie in (0, 2]");
  auto g = [&](double t) { return dist.cf_abs2(t) * (1.0 + t * t) * std::pow(std::abs(t), alpha); };
  const double unit = 1.0 / dist.scale();
  detail::CutoffChoice choice;
  if (quad.cutoff > 0.0) {
    choice.cutoff = quad.cutoff;
    const double e_hi = detail::envelope(g, quad.cutoff);
    const double e_lo = detail::envelope(g, quad.cutoff / 16.0);
    choice.finite = !(e_hi > 1e-6 && e_hi >= 0.5 * e_lo);
  } else {
    choice = detail::choose_cutoff(g, unit, detail::cf_decays_exponentially(dist));
  }
  if (!choice.finite) {
    // Report the partial integral at a moderate cutoff alongside the verdict.
    const double T = quad.cutoff > 0.0 ? quad.cutoff : 1024.0 * unit;
    auto r = detail::even_integral(g, dist, T, quad);
    return {r.value, r.abs_error, T, false};
  }
  auto r = detail::even_integral(g, dist, choice.cutoff, quad);
  return {r.value, r.abs_error, choice.cutoff, true};
}

/// Partial integral over [-T, T]; non-decreasing in T.
inline double cf_integrability_partial(const InnovationDistribution& dist, double alpha, double T,
                                       const QuadratureSpec& quad = {}) {
  auto g = [&](double t) { return dist.cf_abs2(t) * (1.0 + t * t) * std::pow(std::abs(t), alpha); };
  return detail::even_integral(g, dist, T, quad).value;
}

struct ParsevalResult {
  double lhs = 0.0;  ///< integral of |cf|^2
  double rhs = 0.0;  ///< 2 pi times the integral of f^2
  double relative_gap = 0.0;
};

inline ParsevalResult parseval_check(const InnovationDistribution& dist, const QuadratureSpec& quad = {}) {
  if (!dist.has_closed_density()) throw CapabilityError("parseval_check requires a closed-form density");
  auto g = [&](double t) { return dist.cf_abs2(t); };
  double T = quad.cutoff;
  if (T <= 0.0) {
    const auto c = detail::choose_cutoff(g, 1.0 / dist.scale(), detail::cf_decays_exponentially(dist));
    if (!c.finite) throw ConfigError("quadrature.cutoff", "cf^2 decays slowly for this law; give an explicit cutoff");
    T = c.cutoff;
  }
  const double lhs = detail::even_integral(g, dist, T, quad).value;
  auto f2 = [&](double x) {
    const double f = dist.pdf(x);
    return f * f;
  };
  double l2 = 0.0;
  if (dist.kind() == InnovationKind::Uniform)
    l2 = integrate(f2, dist.param1(), dist.param2(), quad).value;
  else
    l2 = integrate_real_line(f2, dist.center(), quad).value;
  const double rhs = 2.0 * std::numbers::pi * l2;
  return {lhs, rhs, std::abs(lhs - rhs) / std::abs(rhs)};
}

struct DensityBoundChain {
  double sup_density_sq = 0.0;  ///< (sup_x f)^2
  double cf_side = 0.0;         ///< (1 / 2 pi) times the integral of |cf|^2 (1 + t^2)
  bool finite = true;
};

/// sup f^2 <= int (f^2 + f'^2) = (1 / 2 pi) int |cf|^2 (1 + t^2): the bound
/// that turns cf integrability into a density bound.
inline DensityBoundChain density_bound_chain(const InnovationDistribution& dist, const QuadratureSpec& quad = {}) {
  auto g = [&](double t) { return dist.cf_abs2(t) * (1.0 + t * t); };
  const auto c = quad.cutoff > 0.0 ? detail::CutoffChoice{quad.cutoff, true}
                                   : detail::choose_cutoff(g, 1.0 / dist.scale(), detail::cf_decays_exponentially(dist));
  const double s = dist.density_sup();
  if (!c.finite) return {s * s, std::numeric_limits<double>::infinity(), false};
  const double v = detail::even_integral(g, dist, c.cutoff, quad).value;
  return {s * s, v / (2.0 * std::numbers::pi), true};
}

}  // namespace osclab
