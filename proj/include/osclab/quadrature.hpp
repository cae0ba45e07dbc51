#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature and a few fixed-node helpers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace osclab {

struct QuadratureSpec {
  /// Finite cutoff T for integrals over the real line; 0 selects it automatically.
  double cutoff = 0.0;
  double rel_tol = 1e-11;
  double abs_tol = 1e-14;
  std::size_t max_panels = 200000;
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

namespace detail {

// Kronrod abscissae on [0, 1] (positive half), Gauss points at odd indices.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kWgk[7];
  double g = fc * kWg[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    k += kWgk[j] * s;
    if (j % 2 == 1) g += kWg[j / 2] * s;
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace detail

/// Adaptive G7K15 over [breaks.front(), breaks.back()], starting from the
/// given panel boundaries and bisecting the worst panel until the global
/// error estimate meets the tolerance.
template <class F>
QuadratureResult integrate(const F& f, std::span<const double> breaks, const QuadratureSpec& spec = {}) {
  QuadratureResult out;
  if (breaks.size() < 2) return out;
  std::priority_queue<detail::Panel> heap;
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    auto p = detail::gk15(f, breaks[i], breaks[i + 1]);
    total += p.value;
    err += p.error;
    heap.push(p);
  }
  out.evaluations = 15 * heap.size();
  while (!heap.empty() && err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
    if (heap.size() >= spec.max_panels) {
      out.converged = false;
      break;
    }
    const auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      out.converged = false;
      break;
    }
    heap.pop();
    const auto l = detail::gk15(f, worst.a, mid);
    const auto r = detail::gk15(f, mid, worst.b);
    total += l.value + r.value - worst.value;
    err += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
    out.evaluations += 30;
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  double value = 0.0, error = 0.0;
  std::vector<detail::Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
  for (const auto& p : panels) {
    value += p.value;
    error += p.error;
  }
  out.value = value;
  out.abs_error = error;
  return out;
}

template <class F>
QuadratureResult integrate(const F& f, double a, double b, const QuadratureSpec& spec = {}) {
  const std::array<double, 2> br{a, b};
  return integrate(f, std::span<const double>(br), spec);
}

/// Integral over [a, inf) through x = a + u / (1 - u).
template <class F>
QuadratureResult integrate_to_infinity(const F& f, double a, const QuadratureSpec& spec = {}) {
  auto g = [&](double u) {
    const double one_minus = 1.0 - u;
    if (one_minus <= 0.0) return 0.0;
    const double v = f(a + u / one_minus) / (one_minus * one_minus);
    return std::isfinite(v) ? v : 0.0;
  };
  std::vector<double> br;
  for (int i = 0; i <= 16; ++i) br.push_back(1.0 - std::ldexp(1.0, -i));
  br.front() = 0.0;
  br.push_back(1.0);
  return integrate(g, std::span<const double>(br), spec);
}

/// Integral over the whole real line, split at `center`.
template <class F>
QuadratureResult integrate_real_line(const F& f, double center, const QuadratureSpec& spec = {}) {
  auto right = integrate_to_infinity(f, center, spec);
  auto left = integrate_to_infinity([&](double x) { return f(2.0 * center - x); }, center, spec);
  return {right.value + left.value, right.abs_error + left.abs_error, right.evaluations + left.evaluations,
          right.converged && left.converged};
}

/// Panel breaks for [0, T]: uniform panels of width `width` up to `uniform_end`,
/// then geometric doubling to T.
inline std::vector<double> panel_breaks(double T, double width, double uniform_end) {
  std::vector<double> br{0.0};
  const double end = std::min(T, uniform_end);
  const auto n = static_cast<std::size_t>(std::ceil(end / width));
  for (std::size_t i = 1; i <= n; ++i) br.push_back(std::min(end, width * static_cast<double>(i)));
  double x = br.back();
  while (x < T) {
    x = std::min(T, 2.0 * x);
    br.push_back(x);
  }
  return br;
}

/// Fixed composite G7K15 nodes/weights over the panels given by `breaks`.
struct FixedRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline FixedRule composite_kronrod(std::span<const double> breaks) {
  FixedRule rule;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i], b = breaks[i + 1];
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t j = 0; j < 7; ++j) {
      rule.nodes.push_back(c - h * detail::kXgk[j]);
      rule.weights.push_back(h * detail::kWgk[j]);
      rule.nodes.push_back(c + h * detail::kXgk[j]);
      rule.weights.push_back(h * detail::kWgk[j]);
    }
    rule.nodes.push_back(c);
    rule.weights.push_back(h * detail::kWgk[7]);
  }
  return rule;
}

/// Trapezoidal rule on a uniform grid.
inline double trapezoid(std::span<const double> y, double dx) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * dx;
}

}  // namespace osclab
