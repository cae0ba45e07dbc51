#pragma once

/// @file
/// Martingale / smooth split of the empirical process,
///
///   G_n = G_n^o + G_n^*,  G_n^o = sqrt(n) (F_n - F_n^*),  G_n^* = sqrt(n) (F_n^* - F),
///
/// with F_n^*(x) = (1/n) sum_i F_1(x | past_{i-1}) the average of one-step
/// conditional CDFs and g_n^* = dG_n^*/dx.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <span>
#include <vector>

#include "osclab/cdf.hpp"
#include "osclab/error.hpp"
#include "osclab/mixture.hpp"
#include "osclab/oscillation.hpp"
#include "osclab/process_models.hpp"
#include "osclab/quadrature.hpp"

namespace osclab {

struct Decomposition {
  std::vector<double> grid;
  std::vector<double> g_total;       ///< G_n
  std::vector<double> g_circ;        ///< G_n^o
  std::vector<double> g_star;        ///< G_n^*
  std::vector<double> g_star_deriv;  ///< g_n^*
  double sup_gstar_deriv = 0.0;      ///< max |g_n^*| over the grid
};

/// Default evaluation grid: `points` equispaced over the marginal's
/// [q(1e-4), q(1 - 1e-4)] plus the marginal center when it has one.
inline std::vector<double> default_decomposition_grid(const Marginal& marginal, std::size_t points = 2048) {
  const double lo = marginal.quantile(1e-4), hi = marginal.quantile(1.0 - 1e-4);
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  if (const auto* c = std::get_if<ClosedFormCdf>(&marginal.representation())) g.push_back(c->law().center());
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

namespace detail {

inline void require_decomposable(const ProcessModel& model, const Marginal& marginal) {
  (void)checked_step_law(model);
  if (!marginal.has_density()) throw CapabilityError("decomposition needs a marginal density; the reference has none");
}

}  // namespace detail

/// Direct evaluation on `grid`: O(n |grid|).
inline Decomposition decompose(const PathWithStates& path, const ProcessModel& model, const Marginal& marginal,
                               std::span<const double> grid) {
  detail::require_decomposable(model, marginal);
  if (path.values.size() != path.states.size() || path.values.empty())
    throw ConfigError("path", "values and states must be non-empty and of equal length");
  const auto law = model.step_law();
  const SortedSample sample(path.values);
  const std::size_t n = path.values.size();
  const double nd = static_cast<double>(n), rn = std::sqrt(nd);
  const bool iid = model.kind() == ModelKind::Iid;

  Decomposition d;
  d.grid.assign(grid.begin(), grid.end());
  const std::size_t G = grid.size();
  d.g_total.resize(G);
  d.g_circ.resize(G);
  d.g_star.resize(G);
  d.g_star_deriv.resize(G);
  for (std::size_t k = 0; k < G; ++k) {
    const double x = grid[k];
    const double F = marginal.cdf(x), f = marginal.pdf(x);
    double Fs = F, fs = f;
    if (!iid) {
      double sc = 0.0, sd = 0.0;
      for (double y : path.states) {
        sc += law.cdf(x - y);
        sd += law.pdf(x - y);
      }
      Fs = sc / nd;
      fs = sd / nd;
    }
    const double Fn = edf_eval(sample, x);
    d.g_total[k] = rn * (Fn - F);
    d.g_circ[k] = rn * (Fn - Fs);
    d.g_star[k] = rn * (Fs - F);
    d.g_star_deriv[k] = rn * (fs - f);
    d.sup_gstar_deriv = std::max(d.sup_gstar_deriv, std::abs(d.g_star_deriv[k]));
  }
  return d;
}

namespace detail {

// sup |h_j - h_i| over index pairs with grid[j] - grid[i] <= b (sorted grid).
inline double grid_modulus(std::span<const double> grid, std::span<const double> h, double b) {
  std::deque<std::size_t> qmax, qmin;
  std::size_t end = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (end < i) end = i;
    while (end < h.size() && grid[end] - grid[i] <= b) {
      while (!qmax.empty() && h[qmax.back()] <= h[end]) qmax.pop_back();
      qmax.push_back(end);
      while (!qmin.empty() && h[qmin.back()] >= h[end]) qmin.pop_back();
      qmin.push_back(end);
      ++end;
    }
    while (qmax.front() < i) qmax.pop_front();
    while (qmin.front() < i) qmin.pop_front();
    best = std::max({best, h[qmax.front()] - h[i], h[i] - h[qmin.front()]});
  }
  return best;
}

// Same on a uniform lattice with an index window of width w.
inline double lattice_modulus(std::span<const double> h, std::size_t w) {
  std::deque<std::size_t> qmax, qmin;
  std::size_t end = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (end < i) end = i;
    while (end < h.size() && end - i <= w) {
      while (!qmax.empty() && h[qmax.back()] <= h[end]) qmax.pop_back();
      qmax.push_back(end);
      while (!qmin.empty() && h[qmin.back()] >= h[end]) qmin.pop_back();
      qmin.push_back(end);
      ++end;
    }
    while (qmax.front() < i) qmax.pop_front();
    while (qmin.front() < i) qmin.pop_front();
    best = std::max({best, h[qmax.front()] - h[i], h[i] - h[qmin.front()]});
  }
  return best;
}

}  // namespace detail

struct SmoothPartBound {
  double lhs = 0.0;  ///< sup over grid pairs within b of |G_n^*(x) - G_n^*(y)|
  double rhs = 0.0;  ///< b * sup |g_n^*|
};

/// Mean-value link between the smooth part's oscillation and its derivative.
inline SmoothPartBound smooth_part_modulus_bound(const Decomposition& d, double b) {
  if (!(b > 0.0)) throw ConfigError("b", "bandwidth must be positive");
  return {detail::grid_modulus(d.grid, d.g_star, b), b * d.sup_gstar_deriv};
}

/// Summary of the decomposition at scale, computed on a fine lattice.
///
/// F_n^* is tabulated by binning the n states and convolving with the
/// one-step conditional CDF / density (see tabulate_mixture). Its
/// piecewise-linear interpolant is the F_n^* used for G_n^o, so
/// G_n = G_n^o + G_n^* holds exactly for the interpolated pair.
struct LatticeDecomposition {
  double step = 0.0;
  std::size_t lattice_points = 0;
  double delta_circ = 0.0;          ///< exact modulus of G_n^o
  double delta_star = 0.0;          ///< lattice modulus of G_n^* over pairs within b
  double delta_star_cover = 0.0;    ///< lattice modulus with window floor(b/step) + 2
  double sup_gstar_deriv = 0.0;     ///< max |g_n^*| on the lattice
  double interpolation_slack = 0.0; ///< 2 sqrt(n) step^2 / 8 max|f'|
  double max_identity_error = 0.0;  ///< max |G_n - G_n^o - G_n^*| on the lattice
};

/// Lattice spacing for a bandwidth: the power of two at most b / 16, capped at 2^-9.
inline double lattice_step_for(double b) { return std::min(std::ldexp(1.0, -9), floor_pow2(b / 16.0)); }

inline LatticeDecomposition decompose_on_lattice(const PathWithStates& path, const SortedSample& sample,
                                                 const ProcessModel& model, const Marginal& marginal, double b,
                                                 double step) {
  detail::require_decomposable(model, marginal);
  const std::size_t n = sample.size();
  const double nd = static_cast<double>(n), rn = std::sqrt(nd);
  LatticeDecomposition out;
  out.step = step;

  if (model.kind() == ModelKind::Iid) {
    // F_1(x | past) = F(x): the smooth part vanishes identically.
    out.delta_circ = marginal.visit([&](const auto& F) { return oscillation_modulus(sample, b, F); });
    return out;
  }

  const auto law = model.step_law();
  const MixtureTable table = tabulate_mixture(path.states, law, step);
  const std::size_t G = table.cdf.size();
  out.lattice_points = G;

  std::vector<double> g_star(G), g_deriv(G);
  double max_fprime = table.max_density_slope;
  double f_prev = 0.0;
  std::size_t count = 0;
  const auto xs = sample.values();
  for (std::size_t k = 0; k < G; ++k) {
    const double x = table.knot(k);
    const double F = marginal.cdf(x), f = marginal.pdf(x);
    g_star[k] = rn * (table.cdf[k] - F);
    g_deriv[k] = rn * (table.density[k] - f);
    out.sup_gstar_deriv = std::max(out.sup_gstar_deriv, std::abs(g_deriv[k]));
    if (k > 0) max_fprime = std::max(max_fprime, std::abs(f - f_prev) / step);
    f_prev = f;
    while (count < n && xs[count] <= x) ++count;
    const double Fn = static_cast<double>(count) / nd;
    const double total = rn * (Fn - F), circ = rn * (Fn - table.cdf[k]);
    out.max_identity_error = std::max(out.max_identity_error, std::abs(total - circ - g_star[k]));
  }

  const auto w = static_cast<std::size_t>(std::floor(b / step));
  out.delta_star = detail::lattice_modulus(g_star, w);
  out.delta_star_cover = detail::lattice_modulus(g_star, w + 2);
  out.interpolation_slack = 2.0 * rn * step * step / 8.0 * max_fprime;
  out.delta_circ = oscillation_modulus(sample, b, table.to_cdf());
  return out;
}

// ---------------------------------------------------------------------------
// Kolmogorov-type inequalities

struct KolmogorovCheck {
  double sup_sq = 0.0;        ///< sup H^2
  double bound = 0.0;         ///< lambda int H^2 + lambda^{-1} int H'^2
  double taikov_bound = 0.0;  ///< int H^2 * int H'^2 (compare with sup H^4)
  double int_h_sq = 0.0;
  double int_hprime_sq = 0.0;
};

/// H and H' sampled on a uniform grid of spacing dx; trapezoidal integrals.
inline KolmogorovCheck kolmogorov_check(std::span<const double> h, std::span<const double> hprime, double dx,
                                        double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("lambda", "must be positive");
  if (h.size() != hprime.size()) throw ConfigError("hprime", "must match the length of h");
  KolmogorovCheck k;
  std::vector<double> h2(h.size()), d2(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    h2[i] = h[i] * h[i];
    d2[i] = hprime[i] * hprime[i];
    k.sup_sq = std::max(k.sup_sq, h2[i]);
  }
  k.int_h_sq = trapezoid(h2, dx);
  k.int_hprime_sq = trapezoid(d2, dx);
  k.bound = lambda * k.int_h_sq + k.int_hprime_sq / lambda;
  k.taikov_bound = k.int_h_sq * k.int_hprime_sq;
  return k;
}

}  // namespace osclab
