#pragma once

/// @file
/// Monte Carlo experiments over (n, replicate) cells: the oscillation rate,
/// the iid-uniform calibration, and the smooth-part derivative trend.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "osclab/decomposition.hpp"
#include "osclab/error.hpp"
#include "osclab/oscillation.hpp"
#include "osclab/parallel.hpp"
#include "osclab/process_models.hpp"
#include "osclab/rng.hpp"
#include "osclab/stats.hpp"

namespace osclab {

// ---------------------------------------------------------------------------
// Bandwidth rules and regime checks

struct BandwidthRule {
  enum class Kind { PowerLaw, Explicit, InverseLog };
  Kind kind = Kind::PowerLaw;
  double eta = 0.5;              ///< PowerLaw: b_n = n^{-eta}
  double scale = 1.0;            ///< InverseLog: b_n = scale / log n
  std::vector<double> values;    ///< Explicit: one bandwidth per grid point

  static BandwidthRule power_law(double eta) { return {Kind::PowerLaw, eta, 1.0, {}}; }
  static BandwidthRule explicit_list(std::vector<double> v) { return {Kind::Explicit, 0.0, 1.0, std::move(v)}; }
  static BandwidthRule inverse_log(double scale = 1.0) { return {Kind::InverseLog, 0.0, scale, {}}; }

  double operator()(std::size_t index, std::size_t n) const {
    const double nd = static_cast<double>(n);
    switch (kind) {
      case Kind::PowerLaw: return std::pow(nd, -eta);
      case Kind::InverseLog: return scale / std::log(nd);
      case Kind::Explicit: return values.at(index);
    }
    return 0.0;
  }
};

inline std::string to_string(BandwidthRule::Kind k) {
  switch (k) {
    case BandwidthRule::Kind::PowerLaw: return "power_law";
    case BandwidthRule::Kind::Explicit: return "explicit";
    case BandwidthRule::Kind::InverseLog: return "inverse_log";
  }
  return "?";
}

inline std::vector<double> bandwidths(const BandwidthRule& rule, const std::vector<std::size_t>& n_grid) {
  std::vector<double> b(n_grid.size());
  for (std::size_t i = 0; i < n_grid.size(); ++i) b[i] = rule(i, n_grid[i]);
  return b;
}

struct RegimeCheck {
  bool ok = true;
  std::string reason;
};

/// b_n -> 0, n b_n -> infinity and log n = O(n b_n), read along the grid:
/// b_n decreasing and below 1, n b_n increasing, and n b_n / log n not
/// collapsing (its last value at least half its first).
inline RegimeCheck check_regime(const std::vector<std::size_t>& n_grid, const std::vector<double>& b) {
  if (n_grid.size() < 2) return {false, "n_grid needs at least two points"};
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 2) return {false, "n must be at least 2"};
    if (!(b[i] > 0.0 && b[i] < 1.0)) return {false, "bandwidths must lie in (0, 1)"};
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) return {false, "n_grid must be increasing"};
    if (i > 0 && !(b[i] < b[i - 1])) return {false, "b_n must decrease along the grid"};
    if (i > 0 && !(n_grid[i] * b[i] > n_grid[i - 1] * b[i - 1])) return {false, "n b_n must increase along the grid"};
  }
  auto ratio = [&](std::size_t i) { return static_cast<double>(n_grid[i]) * b[i] / std::log(static_cast<double>(n_grid[i])); };
  if (ratio(n_grid.size() - 1) < 0.5 * ratio(0)) return {false, "n b_n / log n collapses along the grid"};
  return {};
}

/// The calibration regime: log n = o(n b_n) and log log n = o(log 1/b_n),
/// read as both ratios strictly decreasing along the grid.
inline RegimeCheck check_stute_regime(const std::vector<std::size_t>& n_grid, const std::vector<double>& b) {
  auto base = check_regime(n_grid, b);
  if (!base.ok) return base;
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    const double l0 = std::log(static_cast<double>(n_grid[i - 1])), l1 = std::log(static_cast<double>(n_grid[i]));
    const double r0 = l0 / (static_cast<double>(n_grid[i - 1]) * b[i - 1]);
    const double r1 = l1 / (static_cast<double>(n_grid[i]) * b[i]);
    if (!(r1 < r0)) return {false, "log n / (n b_n) does not decrease along the grid"};
    const double s0 = std::log(l0) / std::log(1.0 / b[i - 1]);
    const double s1 = std::log(l1) / std::log(1.0 / b[i]);
    if (!(s1 < s0 * (1.0 - 1e-9))) return {false, "log log n / log(1/b_n) does not decrease along the grid"};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Configuration and records

struct ExperimentConfig {
  std::string label = "experiment";
  ProcessModel model = ProcessModel::iid(InnovationDistribution::uniform(0.0, 1.0));
  std::vector<std::size_t> n_grid;
  BandwidthRule bandwidth;
  std::size_t replicates = 20;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  MarginalOptions marginal;
  bool decomposition = true;
  bool check_rate_slope = true;
  double rate_slope_tolerance = 0.15;
  double ratio_bound_factor = 3.0;
  double gstar_slope_max = 0.05;
  double stute_band_lo = 1.1;
  double stute_band_hi = 1.75;
  double stute_paired_min = 0.7;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RateRecord {
  std::size_t n_index = 0;
  std::size_t replicate = 0;
  OscillationRecord osc;
  bool decomposed = false;
  double delta_circ = kNaN;
  double delta_star = kNaN;
  double delta_star_cover = kNaN;
  double sup_gstar = kNaN;
  double b_sup_gstar = kNaN;
  double gstar_iota = kNaN;       ///< sup|g_n^*| / iota(n)
  double slack = kNaN;            ///< interpolation slack of the lattice
  double identity_error = kNaN;
  double reference_error = 0.0;
  bool triangle_ok = true;        ///< Delta <= Delta^o + Delta^* (+ slack)
  bool mvt_ok = true;             ///< Delta^* <= b sup|g^*| (1 + 1e-2)
  std::string error;              ///< non-empty when the cell failed
};

struct Aggregate {
  std::size_t n = 0;
  double b = 0.0;
  std::size_t count = 0;
  double median_delta = kNaN, iqr_delta = kNaN;
  double median_ratio_sqrt = kNaN, iqr_ratio_sqrt = kNaN;
  double median_ratio_stute = kNaN, iqr_ratio_stute = kNaN;
  double median_ratio_iota = kNaN, iqr_ratio_iota = kNaN;
  double median_delta_circ = kNaN;
  double median_sup_gstar = kNaN;
  double median_gstar_iota = kNaN, iqr_gstar_iota = kNaN;
};

struct Check {
  std::string name;
  std::string status;  ///< pass, fail, inconclusive, informational
  std::map<std::string, double> numbers;
  std::string message;
};

struct ExperimentReport {
  std::string label;
  std::string kind;  ///< rate, stute, gstar
  std::string model;
  std::string marginal_mode;
  std::string bandwidth_rule;
  std::vector<std::size_t> n_grid;
  std::vector<double> b_grid;
  std::size_t replicates = 0;
  std::vector<RateRecord> records;
  std::vector<Aggregate> aggregates;
  std::vector<Check> checks;
  bool complete = true;
  double wall_seconds = 0.0;

  bool passed() const {
    return std::none_of(checks.begin(), checks.end(), [](const Check& c) { return c.status == "fail"; });
  }
  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

/// Per-n medians and IQRs, recomputable from the raw records alone.
/// Failed cells are skipped.
inline std::vector<Aggregate> aggregate(const std::vector<RateRecord>& records, std::size_t grid_size) {
  std::vector<Aggregate> out(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    std::vector<double> d, rs, rt, ri, dc, sg, gi;
    for (const auto& r : records) {
      if (r.n_index != i || !r.error.empty()) continue;
      out[i].n = r.osc.n;
      out[i].b = r.osc.b;
      d.push_back(r.osc.delta);
      rs.push_back(r.osc.ratio_sqrt);
      rt.push_back(r.osc.ratio_stute);
      ri.push_back(r.osc.ratio_iota);
      if (r.decomposed) {
        dc.push_back(r.delta_circ);
        sg.push_back(r.sup_gstar);
        gi.push_back(r.gstar_iota);
      }
    }
    auto& a = out[i];
    a.count = d.size();
    if (d.empty()) continue;
    a.median_delta = stats::median(d);
    a.iqr_delta = stats::iqr(d);
    a.median_ratio_sqrt = stats::median(rs);
    a.iqr_ratio_sqrt = stats::iqr(rs);
    a.median_ratio_stute = stats::median(rt);
    a.iqr_ratio_stute = stats::iqr(rt);
    a.median_ratio_iota = stats::median(ri);
    a.iqr_ratio_iota = stats::iqr(ri);
    if (!dc.empty()) {
      a.median_delta_circ = stats::median(dc);
      a.median_sup_gstar = stats::median(sg);
      a.median_gstar_iota = stats::median(gi);
      a.iqr_gstar_iota = stats::iqr(gi);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cells

/// Whether the lattice decomposition applies to the model and marginal.
inline bool supports_decomposition(const ProcessModel& model, const Marginal& marginal) {
  if (!model.additive() || !marginal.has_density()) return false;
  const auto law = model.step_law();
  return law.has_closed_density() && law.light_tailed();
}

namespace detail {

inline RateRecord run_cell(const ExperimentConfig& cfg, const Marginal& marginal, bool decompose, std::size_t n_index,
                           std::size_t rep, double b) {
  RateRecord rec;
  rec.n_index = n_index;
  rec.replicate = rep;
  const std::size_t n = cfg.n_grid[n_index];
  Stream stream(cfg.seed, {static_cast<std::uint64_t>(StreamTag::kReplicate), n_index, rep});
  auto path = simulate_path_with_states(cfg.model, n, stream);
  const SortedSample sample(path.values);
  const double delta = marginal.visit([&](const auto& F) { return oscillation_modulus(sample, b, F); });
  rec.osc = make_record(n, b, delta);
  rec.reference_error = marginal.reference_error(n);
  if (!decompose) return rec;

  const auto d = decompose_on_lattice(path, sample, cfg.model, marginal, b, lattice_step_for(b));
  rec.decomposed = true;
  rec.delta_circ = d.delta_circ;
  rec.delta_star = d.delta_star;
  rec.delta_star_cover = d.delta_star_cover;
  rec.sup_gstar = d.sup_gstar_deriv;
  rec.b_sup_gstar = b * d.sup_gstar_deriv;
  rec.gstar_iota = d.sup_gstar_deriv / iota(static_cast<double>(n));
  rec.slack = d.interpolation_slack;
  rec.identity_error = d.max_identity_error;
  const double fp = 1e-9 * (1.0 + delta);
  rec.triangle_ok = delta <= d.delta_circ + d.delta_star_cover + d.interpolation_slack + fp;
  rec.mvt_ok = d.delta_star <= rec.b_sup_gstar * 1.01 + 1e-12;
  return rec;
}

inline void run_cells(const ExperimentConfig& cfg, const Marginal& marginal, bool decompose, ExperimentReport& rep) {
  const std::size_t R = cfg.replicates, G = cfg.n_grid.size();
  rep.records.assign(G * R, {});
  // Largest n first so the long cells start early.
  parallel_for(G * R, cfg.threads, [&](std::size_t job) {
    const std::size_t cell = G * R - 1 - job;
    const std::size_t i = cell / R, r = cell % R;
    try {
      rep.records[cell] = run_cell(cfg, marginal, decompose, i, r, rep.b_grid[i]);
    } catch (const std::exception& e) {
      RateRecord failed;
      failed.n_index = i;
      failed.replicate = r;
      failed.osc.n = cfg.n_grid[i];
      failed.osc.b = rep.b_grid[i];
      failed.error = e.what();
      rep.records[cell] = std::move(failed);
    }
  });
  for (const auto& r : rep.records)
    if (!r.error.empty()) rep.complete = false;
  rep.aggregates = aggregate(rep.records, G);
}

inline std::string describe(const ProcessModel& m) {
  std::string s = to_string(m.kind()) + "/" + to_string(m.innovation().kind());
  if (m.kind() == ModelKind::ThresholdAR) s += "(" + std::to_string(m.tar_a()) + "," + std::to_string(m.tar_b()) + ")";
  if (m.kind() == ModelKind::Linear) s += "[L=" + std::to_string(m.coeffs().size()) + "]";
  return s;
}

inline ExperimentReport start_report(const ExperimentConfig& cfg, const std::string& kind, const Marginal& marginal) {
  ExperimentReport rep;
  rep.label = cfg.label;
  rep.kind = kind;
  rep.model = describe(cfg.model);
  rep.marginal_mode = to_string(marginal.mode());
  rep.bandwidth_rule = to_string(cfg.bandwidth.kind);
  rep.n_grid = cfg.n_grid;
  rep.b_grid = bandwidths(cfg.bandwidth, cfg.n_grid);
  rep.replicates = cfg.replicates;
  return rep;
}

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.n_grid.empty()) throw ConfigError("n_grid", "must not be empty");
  if (cfg.replicates < 1) throw ConfigError("replicates", "must be at least 1");
  if (cfg.bandwidth.kind == BandwidthRule::Kind::Explicit && cfg.bandwidth.values.size() != cfg.n_grid.size())
    throw ConfigError("bandwidth.values", "needs one bandwidth per n_grid entry");
  if (cfg.bandwidth.kind == BandwidthRule::Kind::PowerLaw && !(cfg.bandwidth.eta > 0.0 && cfg.bandwidth.eta < 1.0))
    throw ConfigError("bandwidth.eta", "must lie in (0, 1)");
}

inline std::vector<double> log_of(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::log(x); });
  return out;
}

inline Check gstar_trend_check(const ExperimentReport& rep, double slope_max) {
  Check c{"gstar_trend", "pass", {}, ""};
  std::vector<double> ln, lr;
  bool all_zero = true;
  for (const auto& a : rep.aggregates) {
    if (std::isnan(a.median_gstar_iota)) continue;
    if (a.median_gstar_iota > 0.0) {
      all_zero = false;
      ln.push_back(std::log(static_cast<double>(a.n)));
      lr.push_back(std::log(a.median_gstar_iota));
    }
  }
  if (all_zero) {
    c.message = "sup|g*| vanishes identically";
    c.numbers["slope"] = 0.0;
    return c;
  }
  if (ln.size() < 2) return {"gstar_trend", "inconclusive", {}, "fewer than two usable grid points"};
  const auto fit = stats::ols(ln, lr);
  c.numbers["slope"] = fit.slope;
  c.numbers["r_squared"] = fit.r_squared;
  c.numbers["slope_max"] = slope_max;
  c.status = fit.slope <= slope_max ? "pass" : "fail";
  return c;
}

}  // namespace detail

inline double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Experiments

inline ExperimentReport run_rate_experiment(const ExperimentConfig& cfg, const Marginal& marginal) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::validate(cfg);
  auto rep = detail::start_report(cfg, "rate", marginal);
  const auto regime = check_regime(cfg.n_grid, rep.b_grid);
  if (!regime.ok) throw ConfigError("bandwidth", regime.reason);
  const bool informational = cfg.bandwidth.kind == BandwidthRule::Kind::InverseLog;
  const bool decompose = cfg.decomposition && supports_decomposition(cfg.model, marginal);
  detail::run_cells(cfg, marginal, decompose, rep);

  auto status = [&](bool ok) -> std::string { return informational ? "informational" : (ok ? "pass" : "fail"); };
  rep.checks.push_back({"regime", "pass", {}, ""});

  // Ratio boundedness: max median ratio over the grid within a factor of the first.
  {
    const double first = rep.aggregates.front().median_ratio_sqrt;
    double mx = 0.0;
    for (const auto& a : rep.aggregates) mx = std::max(mx, a.median_ratio_sqrt);
    rep.checks.push_back({"ratio_bounded",
                          status(mx <= cfg.ratio_bound_factor * first),
                          {{"max_median_ratio", mx}, {"first_median_ratio", first}, {"factor", cfg.ratio_bound_factor}},
                          ""});
  }
  if (cfg.check_rate_slope && rep.aggregates.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& a : rep.aggregates) {
      x.push_back(std::log(rate_sqrt(static_cast<double>(a.n), a.b)));
      y.push_back(std::log(a.median_delta));
    }
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (*hi - *lo < 1e-6) {
      // b_n log n constant along the grid (inverse-log rule): no slope to fit
      rep.checks.push_back({"rate_slope", "inconclusive", {}, "the rate sqrt(b log n) is constant along the grid"});
    } else {
      const auto fit = stats::ols(x, y);
      rep.checks.push_back({"rate_slope",
                            status(std::abs(fit.slope - 1.0) <= cfg.rate_slope_tolerance),
                            {{"slope", fit.slope}, {"r_squared", fit.r_squared}, {"tolerance", cfg.rate_slope_tolerance}},
                            ""});
    }
  }
  if (decompose) {
    std::size_t tri = 0, mvt = 0;
    double max_id = 0.0;
    for (const auto& r : rep.records) {
      if (!r.error.empty()) continue;
      tri += !r.triangle_ok;
      mvt += !r.mvt_ok;
      max_id = std::max(max_id, r.identity_error);
    }
    rep.checks.push_back({"decomposition_triangle", tri == 0 ? "pass" : "fail", {{"violations", double(tri)}}, ""});
    rep.checks.push_back({"decomposition_mvt", mvt == 0 ? "pass" : "fail", {{"violations", double(mvt)}}, ""});
    rep.checks.push_back({"decomposition_identity", max_id <= 1e-10 ? "pass" : "fail", {{"max_error", max_id}}, ""});
    auto g = detail::gstar_trend_check(rep, cfg.gstar_slope_max);
    if (informational && g.status != "inconclusive") g.status = "informational";
    rep.checks.push_back(std::move(g));
  }
  if (!rep.complete) rep.checks.push_back({"complete", "fail", {}, "some cells failed; see the error column"});
  rep.wall_seconds = elapsed_since(t0);
  return rep;
}

inline ExperimentReport run_rate_experiment(const ExperimentConfig& cfg) {
  return run_rate_experiment(cfg, build_marginal(cfg.model, cfg.marginal));
}

/// Calibration against the iid-uniform limit sqrt(2) of
/// Delta_n(b_n) / sqrt(b_n log(1/b_n)).
inline ExperimentReport run_stute_calibration(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  detail::validate(cfg);
  const auto& e = cfg.model.innovation();
  if (cfg.model.kind() != ModelKind::Iid || e.kind() != InnovationKind::Uniform || e.param1() != 0.0 ||
      e.param2() != 1.0)
    throw ConfigError("model", "the calibration applies to iid Uniform(0,1) samples only");
  const auto b = bandwidths(cfg.bandwidth, cfg.n_grid);
  const auto regime = check_stute_regime(cfg.n_grid, b);
  if (!regime.ok) throw ConfigError("bandwidth", regime.reason);

  const Marginal marginal = build_marginal(cfg.model, cfg.marginal);
  auto rep = detail::start_report(cfg, "stute", marginal);
  detail::run_cells(cfg, marginal, false, rep);

  const double target = std::numbers::sqrt2;
  const auto& first = rep.aggregates.front();
  const auto& last = rep.aggregates.back();
  bool positive = true;
  for (const auto& r : rep.records) positive = positive && (!r.error.empty() || r.osc.ratio_stute > 0.0);
  rep.checks.push_back({"ratio_positive", positive ? "pass" : "fail", {}, ""});
  const double med = last.median_ratio_stute;
  rep.checks.push_back({"stute_band",
                        med >= cfg.stute_band_lo && med <= cfg.stute_band_hi ? "pass" : "fail",
                        {{"median_ratio", med}, {"lo", cfg.stute_band_lo}, {"hi", cfg.stute_band_hi}, {"n", double(last.n)}},
                        ""});
  rep.checks.push_back({"stute_trend",
                        std::abs(med - target) < std::abs(first.median_ratio_stute - target) ? "pass" : "fail",
                        {{"first_median_ratio", first.median_ratio_stute}, {"last_median_ratio", med}, {"target", target}},
                        ""});
  // Paired replicates: does replicate r at the largest n sit closer to the limit than at the smallest?
  std::size_t closer = 0, pairs = 0;
  const std::size_t R = cfg.replicates, G = cfg.n_grid.size();
  for (std::size_t r = 0; r < R; ++r) {
    const auto& a = rep.records[r];
    const auto& z = rep.records[(G - 1) * R + r];
    if (!a.error.empty() || !z.error.empty()) continue;
    ++pairs;
    closer += std::abs(z.osc.ratio_stute - target) < std::abs(a.osc.ratio_stute - target);
  }
  const double frac = pairs ? static_cast<double>(closer) / static_cast<double>(pairs) : 0.0;
  rep.checks.push_back({"stute_paired", frac >= cfg.stute_paired_min ? "pass" : "fail",
                        {{"fraction_closer", frac}, {"min", cfg.stute_paired_min}}, ""});
  if (!rep.complete) rep.checks.push_back({"complete", "fail", {}, "some cells failed; see the error column"});
  rep.wall_seconds = elapsed_since(t0);
  return rep;
}

/// Median sup|g_n^*| / iota(n) along the grid and its log-log slope.
inline ExperimentReport run_gstar_trend(const ExperimentConfig& cfg) {
  const Marginal marginal = build_marginal(cfg.model, cfg.marginal);
  if (!supports_decomposition(cfg.model, marginal))
    throw CapabilityError("model '" + detail::describe(cfg.model) +
                          "' has no light-tailed closed-form one-step density; sup|g*| is not available");
  const auto t0 = std::chrono::steady_clock::now();
  detail::validate(cfg);
  auto rep = detail::start_report(cfg, "gstar", marginal);
  const auto regime = check_regime(cfg.n_grid, rep.b_grid);
  if (!regime.ok) throw ConfigError("bandwidth", regime.reason);
  detail::run_cells(cfg, marginal, true, rep);
  rep.checks.push_back(detail::gstar_trend_check(rep, cfg.gstar_slope_max));
  if (!rep.complete) rep.checks.push_back({"complete", "fail", {}, "some cells failed; see the error column"});
  rep.wall_seconds = elapsed_since(t0);
  return rep;
}

}  // namespace osclab
