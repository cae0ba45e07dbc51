#pragma once

/// @file
/// Empirical distribution functions and the exact oscillation modulus
///
///   Delta_n(b) = sup_{|x - y| <= b} |G_n(x) - G_n(y)|,  G_n = sqrt(n) (F_n - F),
///
/// for a continuous non-decreasing F.
///
/// Between atoms G_n only moves through F, so the supremum splits into three
/// families, all evaluated exactly (atoms u_1 < ... < u_m with cumulative
/// counts C_k = #{X <= u_k}):
///
///  (up)    G(y) - G(x) with x -> u_i-, y = u_j, u_j - u_i < b:
///            (C_j - C_{i-1}) / n - (F(u_j) - F(u_i))
///  (down)  G(x) - G(y) with x = u_i, y -> u_j-, u_j - u_i <= b:
///            F(u_j) - F(u_i) - (C_{j-1} - C_i) / n
///  (slide) G(x) - G(x + b) with both ends free: the atom count in (x, x + b]
///          is constant between consecutive events {u_k, u_k - b}, and the
///          window gain F(x + b) - F(x) peaks either at an event or at one of
///          the CDF's critical points, which join the event list.
///
/// The first two use a sliding-window minimum (monotone deque) over atoms;
/// the third is a sweep over the merged event list. O((n + K) log(n + K)) for
/// K critical points.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <iterator>
#include <limits>
#include <span>
#include <vector>

#include "osclab/cdf.hpp"
#include "osclab/error.hpp"

namespace osclab {

/// Order statistics X_(1) <= ... <= X_(n).
class SortedSample {
 public:
  SortedSample() = default;
  explicit SortedSample(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_)
      if (!std::isfinite(v)) throw ConfigError("sample", "values must be finite");
    std::sort(values_.begin(), values_.end());
  }

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

  /// #{X_i <= x}
  std::size_t count_le(double x) const {
    return static_cast<std::size_t>(std::upper_bound(values_.begin(), values_.end(), x) - values_.begin());
  }
  /// #{X_i < x}
  std::size_t count_lt(double x) const {
    return static_cast<std::size_t>(std::lower_bound(values_.begin(), values_.end(), x) - values_.begin());
  }

 private:
  std::vector<double> values_;
};

/// F_n(x) = (1/n) #{X_i <= x}.
inline double edf_eval(const SortedSample& s, double x) {
  if (s.empty()) throw ConfigError("sample", "empty sample");
  return static_cast<double>(s.count_le(x)) / static_cast<double>(s.size());
}

/// F_n(x-) = (1/n) #{X_i < x}.
inline double edf_left_limit(const SortedSample& s, double x) {
  if (s.empty()) throw ConfigError("sample", "empty sample");
  return static_cast<double>(s.count_lt(x)) / static_cast<double>(s.size());
}

namespace detail {

// Sliding-window minimum over indices [lo(j), hi(j)] with both ends
// non-decreasing in j.
class WindowMin {
 public:
  explicit WindowMin(std::span<const double> v) : v_(v) {}
  void push(std::size_t i) {
    while (!q_.empty() && v_[q_.back()] >= v_[i]) q_.pop_back();
    q_.push_back(i);
  }
  void drop_before(std::size_t lo) {
    while (!q_.empty() && q_.front() < lo) q_.pop_front();
  }
  bool empty() const { return q_.empty(); }
  double min() const { return v_[q_.front()]; }

 private:
  std::span<const double> v_;
  std::deque<std::size_t> q_;
};

}  // namespace detail

struct ModulusParts {
  double up = 0.0;     ///< sup of G(y) - G(x), scaled by 1/sqrt(n)
  double down = 0.0;   ///< sup of G(x) - G(y) with atom-bounded ends
  double slide = 0.0;  ///< sup of G(x) - G(x + b)
  double delta = 0.0;  ///< sqrt(n) * max(up, down, slide, 0)
};

/// Exact Delta_n(b) with its three components.
template <ContinuousCdf Cdf>
ModulusParts oscillation_modulus_parts(const SortedSample& s, double b, const Cdf& F) {
  if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("b", "bandwidth must be positive and finite");
  if (s.empty()) throw ConfigError("sample", "empty sample");
  const std::size_t n = s.size();
  const double nd = static_cast<double>(n);
  const auto x = s.values();

  // Distinct atoms and cumulative counts.
  std::vector<double> u;
  std::vector<double> cum;  // C_k / n
  u.reserve(n);
  cum.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (u.empty() || x[i] > u.back()) {
      u.push_back(x[i]);
      cum.push_back(0.0);
    }
    cum.back() = static_cast<double>(i + 1) / nd;
  }
  const std::size_t m = u.size();
  std::vector<double> fu(m);
  for (std::size_t k = 0; k < m; ++k) {
    fu[k] = F(u[k]);
    if (!std::isfinite(fu[k]) || fu[k] < -1e-12 || fu[k] > 1.0 + 1e-12)
      throw ContractViolation("CDF value outside [0, 1] at a sample point");
    if (k > 0 && fu[k] < fu[k - 1] - 1e-12) throw ContractViolation("CDF is not non-decreasing at the sample points");
  }
  auto cum_before = [&](std::size_t k) { return k == 0 ? 0.0 : cum[k - 1]; };

  ModulusParts parts;

  // (up): max_j [C_j/n - F(u_j)] - min_{i: u_j - u_i < b} [C_{i-1}/n - F(u_i)].
  {
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = cum_before(i) - fu[i];
    detail::WindowMin wm(v);
    std::size_t lo = 0;
    double best = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      wm.push(j);
      while (!(u[j] - u[lo] < b)) ++lo;
      wm.drop_before(lo);
      best = std::max(best, (cum[j] - fu[j]) - wm.min());
    }
    parts.up = best;
  }

  // (down): max_j [F(u_j) - C_{j-1}/n] - min_{i < j: u_j - u_i <= b} [F(u_i) - C_i/n].
  {
    std::vector<double> q(m);
    for (std::size_t i = 0; i < m; ++i) q[i] = fu[i] - cum[i];
    detail::WindowMin wm(q);
    std::size_t lo = 0;
    double best = 0.0;
    for (std::size_t j = 1; j < m; ++j) {
      wm.push(j - 1);
      while (lo < j && u[j] - u[lo] > b) ++lo;
      wm.drop_before(lo);
      if (!wm.empty()) best = std::max(best, (fu[j] - cum_before(j)) - wm.min());
    }
    parts.down = best;
  }

  // (slide): sup_x F(x + b) - F(x) - #{X in (x, x + b]} / n.
  {
    // Atoms and atoms - b are each sorted already: merge them, then fold in
    // the CDF's own critical points.
    std::vector<double> shifted(m), crit;
    for (std::size_t k = 0; k < m; ++k) shifted[k] = u[k] - b;
    F.append_critical_points(b, crit);
    std::erase_if(crit, [](double e) { return !std::isfinite(e); });
    std::sort(crit.begin(), crit.end());
    std::vector<double> ev(2 * m), all;
    std::merge(u.begin(), u.end(), shifted.begin(), shifted.end(), ev.begin());
    all.reserve(ev.size() + crit.size());
    std::merge(ev.begin(), ev.end(), crit.begin(), crit.end(), std::back_inserter(all));
    ev = std::move(all);
    ev.erase(std::unique(ev.begin(), ev.end()), ev.end());

    auto gain = [&](double e) { return F(e + b) - F(e); };
    // Piece midpoints increase, so both counts advance monotonically.
    std::size_t lo_count = 0, hi_count = 0;
    auto count_on = [&](double mid) {
      while (lo_count < n && x[lo_count] <= mid) ++lo_count;
      while (hi_count < n && x[hi_count] <= mid + b) ++hi_count;
      return static_cast<double>(hi_count - lo_count) / nd;
    };
    // Unbounded pieces hold no atoms.
    double best = std::max(gain(ev.front()), gain(ev.back()));
    double g_prev = gain(ev.front());
    for (std::size_t k = 0; k + 1 < ev.size(); ++k) {
      const double g_next = gain(ev[k + 1]);
      const double c = count_on(0.5 * (ev[k] + ev[k + 1]));
      best = std::max(best, std::max(g_prev, g_next) - c);
      g_prev = g_next;
    }
    parts.slide = best;
  }

  parts.delta = std::sqrt(nd) * std::max({parts.up, parts.down, parts.slide, 0.0});
  return parts;
}

/// Exact Delta_n(b).
template <ContinuousCdf Cdf>
double oscillation_modulus(const SortedSample& s, double b, const Cdf& F) {
  return oscillation_modulus_parts(s, b, F).delta;
}

/// Grid oracle for Delta_n(b): every grid point is probed both as a value
/// and as a left limit, and all pairs within distance b are compared through
/// window extrema over the probes ordered by (position, side). The grid is a
/// uniform lattice of spacing `grid_step` on [X_(1) - b - step, X_(n) + b + step]
/// augmented with the atoms and atoms +- b. A lower bound on the exact value.
template <class Cdf>
double oscillation_modulus_bruteforce(const SortedSample& s, double b, const Cdf& F, double grid_step) {
  if (!(grid_step > 0.0)) throw ConfigError("grid_step", "must be positive");
  if (!(b > 0.0)) throw ConfigError("b", "bandwidth must be positive");
  if (s.empty()) throw ConfigError("sample", "empty sample");
  const double nd = static_cast<double>(s.size());
  const double rn = std::sqrt(nd);
  const double lo = s.min() - b - grid_step, hi = s.max() + b + grid_step;

  std::vector<double> pts;
  const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / grid_step));
  pts.reserve(steps + 1 + 3 * s.size());
  for (std::size_t k = 0; k <= steps; ++k) pts.push_back(lo + grid_step * static_cast<double>(k));
  for (double a : s.values()) {
    pts.push_back(a);
    pts.push_back(a - b);
    pts.push_back(a + b);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

  // Probes: (position, side) with side 0 = left limit, 1 = value; ordered
  // lexicographically. A pair (p, q), p before q, is admissible when the
  // underlying points are within b: a left limit at p followed by a value at
  // q needs q - p < b, every other combination needs q - p <= b.
  struct Probe {
    double pos;
    int side;
    double g;
  };
  std::vector<Probe> probes;
  probes.reserve(2 * pts.size());
  for (double p : pts) {
    const double f = F(p);
    probes.push_back({p, 0, rn * (static_cast<double>(s.count_lt(p)) / nd - f)});
    probes.push_back({p, 1, rn * (static_cast<double>(s.count_le(p)) / nd - f)});
  }
  auto admissible = [b](const Probe& p, const Probe& q) {
    const double d = q.pos - p.pos;
    return (p.side == 0 && q.side == 1) ? d < b : d <= b;
  };

  // For each left probe p, extrema over admissible q at or after p. The
  // admissible set is a prefix of the probes after p, but its end depends on
  // p's side, so keep one window per side of the left probe.
  double best = 0.0;
  for (int left_side = 0; left_side < 2; ++left_side) {
    std::deque<std::size_t> qmax, qmin;
    std::size_t end = 0;  // next probe not yet in the window
    for (std::size_t i = 0; i < probes.size(); ++i) {
      if (probes[i].side != left_side) continue;
      if (end < i) end = i;
      while (end < probes.size() && admissible(probes[i], probes[end])) {
        while (!qmax.empty() && probes[qmax.back()].g <= probes[end].g) qmax.pop_back();
        qmax.push_back(end);
        while (!qmin.empty() && probes[qmin.back()].g >= probes[end].g) qmin.pop_back();
        qmin.push_back(end);
        ++end;
      }
      while (!qmax.empty() && qmax.front() < i) qmax.pop_front();
      while (!qmin.empty() && qmin.front() < i) qmin.pop_front();
      if (qmax.empty()) continue;
      best = std::max({best, probes[qmax.front()].g - probes[i].g, probes[i].g - probes[qmin.front()].g});
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Normalizing rates

/// iota(n) = sqrt(log n) * log log n.
inline double iota(double n) {
  const double l = std::log(n);
  return std::sqrt(l) * std::log(l);
}

inline double rate_sqrt(double n, double b) { return std::sqrt(b * std::log(n)); }
inline double rate_stute(double b) { return std::sqrt(b * std::log(1.0 / b)); }
inline double rate_iota(double n, double b) { return b * iota(n); }

/// One replicate's modulus with its normalizations.
struct OscillationRecord {
  std::size_t n = 0;
  double b = 0.0;
  double delta = 0.0;
  double rate_sqrt = 0.0;   ///< sqrt(b log n)
  double rate_stute = 0.0;  ///< sqrt(b log(1/b))
  double rate_iota = 0.0;   ///< b iota(n)
  double ratio_sqrt = 0.0;
  double ratio_stute = 0.0;
  double ratio_iota = 0.0;
};

inline OscillationRecord make_record(std::size_t n, double b, double delta) {
  OscillationRecord r;
  const double nd = static_cast<double>(n);
  r.n = n;
  r.b = b;
  r.delta = delta;
  r.rate_sqrt = rate_sqrt(nd, b);
  r.rate_stute = rate_stute(b);
  r.rate_iota = rate_iota(nd, b);
  auto ratio = [delta](double rate) { return rate > 0.0 ? delta / rate : std::numeric_limits<double>::quiet_NaN(); };
  r.ratio_sqrt = ratio(r.rate_sqrt);
  r.ratio_stute = ratio(r.rate_stute);
  r.ratio_iota = ratio(r.rate_iota);
  return r;
}

}  // namespace osclab
