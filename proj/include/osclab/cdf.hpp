#pragma once

// Continuous CDF representations consumed by the oscillation-modulus sweep.
//
// A type models the sweep's CDF contract when it provides
//   double operator()(double x) const;            // continuous, non-decreasing
//   void append_critical_points(double b, std::vector<double>& out) const;
// where the critical points contain every x at which the window gain
// x -> F(x + b) - F(x) can have a local maximum not located at a sample event.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "osclab/error.hpp"
#include "osclab/innovations.hpp"

namespace osclab {

template <class C>
concept ContinuousCdf = requires(const C& c, double x, std::vector<double>& out) {
  { c(x) } -> std::convertible_to<double>;
  c.append_critical_points(x, out);
};

/// Closed-form CDF of a Gaussian, Cauchy or uniform law (or a stable law with
/// index 1 or 2). The window gain is quasi-concave, so its global argmax is
/// the only critical point.
class ClosedFormCdf {
 public:
  explicit ClosedFormCdf(InnovationDistribution law) : law_(law) {
    if (!law_.has_closed_density()) throw CapabilityError("closed-form CDF requested for a law without one");
  }

  double operator()(double x) const { return law_.cdf(x); }
  double pdf(double x) const { return law_.pdf(x); }
  double density_sup() const { return law_.density_sup(); }
  const InnovationDistribution& law() const noexcept { return law_; }

  void append_critical_points(double b, std::vector<double>& out) const { out.push_back(law_.window_gain_argmax(b)); }

 private:
  InnovationDistribution law_;
};

/// Continuous piecewise-linear CDF through knots (x_k, F_k), constant outside
/// the knot range. Knots may be uniform (O(1) lookup) or arbitrary. An
/// optional density table on the same knots is interpolated linearly.
class PiecewiseLinearCdf {
 public:
  PiecewiseLinearCdf() = default;

  /// Uniform knots origin + k * step.
  PiecewiseLinearCdf(double origin, double step, std::vector<double> values, std::vector<double> density = {})
      : origin_(origin), step_(step), values_(std::move(values)), density_(std::move(density)), uniform_(true) {
    if (!(step_ > 0.0) || values_.size() < 2) throw std::invalid_argument("PiecewiseLinearCdf: bad grid");
    if (!density_.empty() && density_.size() != values_.size())
      throw std::invalid_argument("PiecewiseLinearCdf: density size mismatch");
    check_monotone();
  }

  /// Arbitrary strictly increasing knots.
  PiecewiseLinearCdf(std::vector<double> knots, std::vector<double> values)
      : knots_(std::move(knots)), values_(std::move(values)), uniform_(false) {
    if (knots_.size() != values_.size() || knots_.size() < 2)
      throw std::invalid_argument("PiecewiseLinearCdf: knot/value size mismatch");
    for (std::size_t i = 1; i < knots_.size(); ++i)
      if (!(knots_[i] > knots_[i - 1])) throw std::invalid_argument("PiecewiseLinearCdf: knots must increase");
    check_monotone();
  }

  std::size_t size() const noexcept { return values_.size(); }
  bool uniform() const noexcept { return uniform_; }
  double step() const noexcept { return step_; }
  double knot(std::size_t k) const noexcept { return uniform_ ? origin_ + step_ * static_cast<double>(k) : knots_[k]; }
  double front() const noexcept { return knot(0); }
  double back() const noexcept { return knot(size() - 1); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> density_values() const noexcept { return density_; }
  bool has_density() const noexcept { return !density_.empty(); }

  double operator()(double x) const { return interpolate(values_, x); }

  double pdf(double x) const {
    if (density_.empty()) throw CapabilityError("piecewise-linear CDF carries no density table");
    if (x < front() || x > back()) return 0.0;
    return interpolate(density_, x);
  }

  double density_sup() const {
    if (!density_.empty()) return *std::max_element(density_.begin(), density_.end());
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < size(); ++k)
      s = std::max(s, (values_[k + 1] - values_[k]) / (knot(k + 1) - knot(k)));
    return s;
  }

  /// The window gain is piecewise linear with breaks at knots and knots - b.
  void append_critical_points(double b, std::vector<double>& out) const {
    out.reserve(out.size() + 2 * size());
    for (std::size_t k = 0; k < size(); ++k) {
      const double x = knot(k);
      out.push_back(x);
      out.push_back(x - b);
    }
  }

  /// Generalized inverse: smallest knot-interpolated x with F(x) >= p.
  double quantile(double p) const {
    const auto it = std::lower_bound(values_.begin(), values_.end(), p);
    if (it == values_.begin()) return front();
    if (it == values_.end()) return back();
    const auto k = static_cast<std::size_t>(it - values_.begin());
    const double f0 = values_[k - 1], f1 = values_[k];
    const double t = f1 > f0 ? (p - f0) / (f1 - f0) : 1.0;
    return knot(k - 1) + t * (knot(k) - knot(k - 1));
  }

 private:
  double interpolate(const std::vector<double>& v, double x) const {
    if (!(x > front())) return v.front();
    if (!(x < back())) return v.back();
    std::size_t k;
    double t;
    if (uniform_) {
      const double u = (x - origin_) / step_;
      k = std::min(static_cast<std::size_t>(u), size() - 2);
      t = u - static_cast<double>(k);
    } else {
      k = static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), x) - knots_.begin()) - 1;
      t = (x - knots_[k]) / (knots_[k + 1] - knots_[k]);
    }
    return v[k] + t * (v[k + 1] - v[k]);
  }

  void check_monotone() const {
    for (std::size_t i = 1; i < values_.size(); ++i)
      if (values_[i] < values_[i - 1]) throw ContractViolation("PiecewiseLinearCdf: values must be non-decreasing");
  }

  double origin_ = 0.0;
  double step_ = 0.0;
  std::vector<double> knots_;
  std::vector<double> values_;
  std::vector<double> density_;
  bool uniform_ = true;
};

/// Any callable CDF together with a callable returning the window-gain
/// critical points for a given b. Used for user-supplied CDFs and in tests.
template <class F, class Critical>
class FunctionCdf {
 public:
  FunctionCdf(F f, Critical critical) : f_(std::move(f)), critical_(std::move(critical)) {}
  double operator()(double x) const { return f_(x); }
  void append_critical_points(double b, std::vector<double>& out) const {
    for (double c : critical_(b)) out.push_back(c);
  }

 private:
  F f_;
  Critical critical_;
};

}  // namespace osclab
