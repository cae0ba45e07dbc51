#pragma once

/// @file
/// Causal stationary process generators X_k = g(..., e_{k-1}, e_k):
/// iid, finite linear filters, contracting recursions X_k = m(X_{k-1}) + e_k
/// and the threshold autoregression. All supported kinds are additive,
/// X_k = a_0 e_k + Y_{k-1} with Y_{k-1} a function of the past, which gives
/// closed-form one-step conditional distributions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "osclab/cdf.hpp"
#include "osclab/error.hpp"
#include "osclab/innovations.hpp"
#include "osclab/mixture.hpp"
#include "osclab/rng.hpp"

namespace osclab {

enum class ModelKind { Iid, Linear, Recursive, ThresholdAR };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Iid: return "iid";
    case ModelKind::Linear: return "linear";
    case ModelKind::Recursive: return "recursive";
    case ModelKind::ThresholdAR: return "tar";
  }
  return "unknown";
}

/// A map m for X_k = m(X_{k-1}) + e_k with declared Lipschitz constant rho < 1.
/// The declared rho is trusted, not verified.
struct RecursiveMap {
  std::string name;
  std::function<double(double)> fn;
  double rho = 0.0;
};

/// Named map families available from configuration files.
inline RecursiveMap named_recursive_map(const std::string& name, double scale) {
  if (!std::isfinite(scale)) throw ConfigError("model.scale", "must be finite");
  if (name == "tanh") return {"tanh", [scale](double x) { return scale * std::tanh(x); }, std::abs(scale)};
  if (name == "sin") return {"sin", [scale](double x) { return scale * std::sin(x); }, std::abs(scale)};
  if (name == "atan") return {"atan", [scale](double x) { return scale * std::atan(x); }, std::abs(scale)};
  if (name == "linear") return {"linear", [scale](double x) { return scale * x; }, std::abs(scale)};
  throw ConfigError("model.map", "unknown map '" + name + "' (expected tanh, sin, atan or linear)");
}

/// Default burn-in: ceil(60 / log(1 / rho)), so rho^B < 1e-26.
inline std::size_t default_burn_in(double rho) {
  if (rho <= 0.0) return 1;
  return static_cast<std::size_t>(std::ceil(60.0 / std::log(1.0 / rho)));
}

class ProcessModel {
 public:
  static ProcessModel iid(InnovationDistribution innovation) {
    ProcessModel m(ModelKind::Iid, innovation);
    return m;
  }

  /// X_k = sum_{i < L} a_i e_{k-i}.
  static ProcessModel linear(std::vector<double> coeffs, InnovationDistribution innovation) {
    if (coeffs.empty()) throw ConfigError("model.coeffs", "needs at least one coefficient");
    for (double a : coeffs)
      if (!std::isfinite(a)) throw ConfigError("model.coeffs", "coefficients must be finite");
    ProcessModel m(ModelKind::Linear, innovation);
    m.coeffs_ = std::move(coeffs);
    return m;
  }

  static ProcessModel recursive(RecursiveMap map, InnovationDistribution innovation,
                                std::optional<std::size_t> burn_in = {}) {
    if (!map.fn) throw ConfigError("model.map", "map function missing");
    if (!(map.rho >= 0.0 && map.rho < 1.0)) throw ConfigError("model.scale", "contraction ratio must lie in [0, 1)");
    ProcessModel m(ModelKind::Recursive, innovation);
    m.rho_ = map.rho;
    m.map_ = std::move(map);
    m.burn_in_ = burn_in.value_or(default_burn_in(m.rho_));
    return m;
  }

  /// X_k = a max(X_{k-1}, 0) + b min(X_{k-1}, 0) + e_k.
  static ProcessModel threshold_ar(double a, double b, InnovationDistribution innovation,
                                   std::optional<std::size_t> burn_in = {}) {
    if (!std::isfinite(a) || !(std::abs(a) < 1.0)) throw ConfigError("model.a", "requires |a| < 1");
    if (!std::isfinite(b) || !(std::abs(b) < 1.0)) throw ConfigError("model.b", "requires |b| < 1");
    ProcessModel m(ModelKind::ThresholdAR, innovation);
    m.tar_a_ = a;
    m.tar_b_ = b;
    m.rho_ = std::max(std::abs(a), std::abs(b));
    m.burn_in_ = burn_in.value_or(default_burn_in(m.rho_));
    return m;
  }

  ModelKind kind() const noexcept { return kind_; }
  const InnovationDistribution& innovation() const noexcept { return innovation_; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }
  double rho() const noexcept { return rho_; }
  std::size_t burn_in() const noexcept { return burn_in_; }
  double tar_a() const noexcept { return tar_a_; }
  double tar_b() const noexcept { return tar_b_; }
  const RecursiveMap& recursive_map() const noexcept { return map_; }

  /// Coefficient on the current innovation.
  double innovation_coefficient() const noexcept { return kind_ == ModelKind::Linear ? coeffs_.front() : 1.0; }

  /// X_k = a_0 e_k + Y_{k-1} with a_0 != 0.
  bool additive() const noexcept { return innovation_coefficient() != 0.0; }

  /// Law of a_0 e_k, the innovation part of one step.
  InnovationDistribution step_law() const {
    if (!additive()) throw CapabilityError("linear model with a_0 = 0 has no one-step conditional density");
    return kind_ == ModelKind::Linear ? innovation_.scaled(coeffs_.front()) : innovation_;
  }

  /// m(x) for the recursive kinds.
  double apply_map(double x) const {
    if (kind_ == ModelKind::ThresholdAR) return tar_a_ * std::max(x, 0.0) + tar_b_ * std::min(x, 0.0);
    return map_.fn(x);
  }

 private:
  ProcessModel(ModelKind k, InnovationDistribution innovation) : kind_(k), innovation_(innovation) {}

  ModelKind kind_;
  InnovationDistribution innovation_;
  std::vector<double> coeffs_;
  RecursiveMap map_;
  double tar_a_ = 0.0;
  double tar_b_ = 0.0;
  double rho_ = 0.0;
  std::size_t burn_in_ = 0;
};

// ---------------------------------------------------------------------------
// Simulation

/// X_1..X_n with the matching states: values[i] = a_0 e_{i+1} + states[i].
struct PathWithStates {
  std::vector<double> values;
  std::vector<double> states;
};

inline PathWithStates simulate_path_with_states(const ProcessModel& model, std::size_t n, Stream& stream) {
  if (n < 1) throw ConfigError("n", "must be at least 1");
  const auto& law = model.innovation();
  PathWithStates p;
  p.values.resize(n);
  p.states.resize(n);
  switch (model.kind()) {
    case ModelKind::Iid:
      for (std::size_t i = 0; i < n; ++i) {
        p.states[i] = 0.0;
        p.values[i] = law.draw(stream);
      }
      break;
    case ModelKind::Linear: {
      const auto a = model.coeffs();
      const std::size_t L = a.size();
      // e[j] holds e_{j - L + 2}, so e_k sits at e[k + L - 2] for k = 2 - L .. n.
      std::vector<double> e(n + L - 1);
      for (auto& v : e) v = law.draw(stream);
      for (std::size_t k = 1; k <= n; ++k) {
        const std::size_t pos = k + L - 2;
        double y = 0.0;
        for (std::size_t i = 1; i < L; ++i) y += a[i] * e[pos - i];
        p.states[k - 1] = y;
        p.values[k - 1] = a[0] * e[pos] + y;
      }
      break;
    }
    case ModelKind::Recursive:
    case ModelKind::ThresholdAR: {
      double x = 0.0;
      for (std::size_t i = 0; i < model.burn_in(); ++i) x = model.apply_map(x) + law.draw(stream);
      for (std::size_t i = 0; i < n; ++i) {
        const double y = model.apply_map(x);
        x = law.draw(stream) + y;
        p.states[i] = y;
        p.values[i] = x;
      }
      break;
    }
  }
  return p;
}

inline std::vector<double> simulate_path(const ProcessModel& model, std::size_t n, Stream& stream) {
  return simulate_path_with_states(model, n, stream).values;
}

/// A path and its coupled copy with e_0 replaced by an independent e'_0.
/// Index k of every vector is time k = 0..horizon; states[k] = Y_{k-1}.
struct CoupledPaths {
  std::size_t horizon = 0;
  std::vector<double> primary;
  std::vector<double> starred;
  std::vector<double> states;
  std::vector<double> starred_states;
  std::vector<double> shared_tail;  ///< e_{-L+1}..e_{-1} (linear) or X_{-1} (recursive)
  double eps0 = 0.0;
  double eps0_prime = 0.0;
};

inline CoupledPaths simulate_coupled(const ProcessModel& model, std::size_t k_max, Stream& stream) {
  const auto& law = model.innovation();
  CoupledPaths c;
  c.horizon = k_max;
  c.primary.resize(k_max + 1);
  c.starred.resize(k_max + 1);
  c.states.resize(k_max + 1);
  c.starred_states.resize(k_max + 1);
  switch (model.kind()) {
    case ModelKind::Iid:
      c.eps0 = law.draw(stream);
      c.eps0_prime = law.draw(stream);
      c.primary[0] = c.eps0;
      c.starred[0] = c.eps0_prime;
      for (std::size_t k = 1; k <= k_max; ++k) c.primary[k] = c.starred[k] = law.draw(stream);
      break;
    case ModelKind::Linear: {
      const auto a = model.coeffs();
      const std::size_t L = a.size();
      // e[j] holds e_{j - (L - 1)} for j = 0 .. L - 1 + k_max.
      std::vector<double> e(L + k_max);
      for (std::size_t j = 0; j + 1 < L; ++j) e[j] = law.draw(stream);
      c.shared_tail.assign(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(L - 1));
      c.eps0 = law.draw(stream);
      c.eps0_prime = law.draw(stream);
      e[L - 1] = c.eps0;
      for (std::size_t k = 1; k <= k_max; ++k) e[L - 1 + k] = law.draw(stream);
      std::vector<double> es = e;
      es[L - 1] = c.eps0_prime;
      for (std::size_t k = 0; k <= k_max; ++k) {
        const std::size_t pos = L - 1 + k;
        double y = 0.0, ys = 0.0;
        for (std::size_t i = 1; i < L; ++i) {
          y += a[i] * e[pos - i];
          ys += a[i] * es[pos - i];
        }
        c.states[k] = y;
        c.starred_states[k] = ys;
        c.primary[k] = a[0] * e[pos] + y;
        c.starred[k] = a[0] * es[pos] + ys;
      }
      break;
    }
    case ModelKind::Recursive:
    case ModelKind::ThresholdAR: {
      double x = 0.0;
      for (std::size_t i = 0; i < model.burn_in(); ++i) x = model.apply_map(x) + law.draw(stream);
      c.shared_tail = {x};
      c.eps0 = law.draw(stream);
      c.eps0_prime = law.draw(stream);
      const double y0 = model.apply_map(x);
      c.states[0] = c.starred_states[0] = y0;
      c.primary[0] = c.eps0 + y0;
      c.starred[0] = c.eps0_prime + y0;
      for (std::size_t k = 1; k <= k_max; ++k) {
        const double e = law.draw(stream);
        const double y = model.apply_map(c.primary[k - 1]);
        const double ys = model.apply_map(c.starred[k - 1]);
        c.states[k] = y;
        c.starred_states[k] = ys;
        c.primary[k] = e + y;
        c.starred[k] = e + ys;
      }
      break;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// One-step conditional distributions

inline InnovationDistribution checked_step_law(const ProcessModel& model) {
  auto law = model.step_law();
  if (!law.has_closed_density())
    throw CapabilityError("innovation law has no closed-form CDF; conditional distributions unavailable");
  return law;
}

/// P(X_k <= x | Y_{k-1} = state) = F_{a_0 e}(x - state).
inline double conditional_cdf(const ProcessModel& model, double x, double state) {
  return checked_step_law(model).cdf(x - state);
}

inline double conditional_density(const ProcessModel& model, double x, double state) {
  return checked_step_law(model).pdf(x - state);
}

/// c_0 with sup_x f_1(x | past) <= c_0 for every past.
inline double conditional_density_bound(const ProcessModel& model) { return checked_step_law(model).density_sup(); }

// ---------------------------------------------------------------------------
// Marginal distributions

/// Little-endian binary file: uint64 count, then `count` float64 values.
inline void save_reference_sample(const std::filesystem::path& path, std::span<const double> sorted) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("reference.cache", "cannot write " + path.string());
  auto put_u64 = [&](std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
  };
  put_u64(sorted.size());
  for (double d : sorted) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(bits);
  }
}

inline std::vector<double> load_reference_sample(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("reference.cache", "cannot read " + path.string());
  auto get_u64 = [&]() {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw ConfigError("reference.cache", "truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  };
  const std::uint64_t n = get_u64();
  std::vector<double> out(n);
  for (auto& d : out) {
    const std::uint64_t bits = get_u64();
    std::memcpy(&d, &bits, 8);
  }
  if (!std::is_sorted(out.begin(), out.end())) throw ConfigError("reference.cache", "values not sorted");
  return out;
}

struct MarginalOptions {
  std::size_t reference_size = 4'000'000;
  std::uint64_t seed = 0x5eed;
  /// Lattice spacing of the mixture reference (power of two).
  double mixture_step = 1.0 / 8192.0;
  /// Knot spacing (in order statistics) of the empirical reference.
  std::size_t empirical_thinning = 64;
  std::optional<std::filesystem::path> cache;
};

/// The marginal CDF F of X_k.
///
/// ClosedForm: iid with a closed-form law, Gaussian / Cauchy linear filters.
/// MixtureReference: F(x) = (1/M) sum_j F_{a_0 e}(x - Y_j) over M stationary
///   states, tabulated on a fine lattice (light-tailed additive models).
/// EmpiricalReference: piecewise-linear interpolation of the EDF of M draws.
class Marginal {
 public:
  enum class Mode { ClosedForm, MixtureReference, EmpiricalReference };
  using Representation = std::variant<ClosedFormCdf, PiecewiseLinearCdf>;

  Marginal(Representation rep, Mode mode, std::size_t reference_size = 0, std::uint64_t seed = 0)
      : rep_(std::move(rep)), mode_(mode), reference_size_(reference_size), seed_(seed) {}

  Mode mode() const noexcept { return mode_; }
  std::size_t reference_size() const noexcept { return reference_size_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const Representation& representation() const noexcept { return rep_; }

  template <class Fn>
  decltype(auto) visit(Fn&& fn) const {
    return std::visit(std::forward<Fn>(fn), rep_);
  }

  double cdf(double x) const {
    return visit([x](const auto& c) { return c(x); });
  }

  bool has_density() const {
    if (const auto* pl = std::get_if<PiecewiseLinearCdf>(&rep_)) return pl->has_density();
    return true;
  }

  double pdf(double x) const {
    return visit([x](const auto& c) { return c.pdf(x); });
  }

  double density_sup() const {
    return visit([](const auto& c) { return c.density_sup(); });
  }

  double quantile(double p) const {
    if (const auto* pl = std::get_if<PiecewiseLinearCdf>(&rep_)) return pl->quantile(p);
    const auto& law = std::get<ClosedFormCdf>(rep_).law();
    double lo = law.center() - law.scale(), hi = law.center() + law.scale();
    while (law.cdf(lo) > p) lo -= 2.0 * (hi - lo);
    while (law.cdf(hi) < p) hi += 2.0 * (hi - lo);
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
      const double mid = 0.5 * (lo + hi);
      (law.cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  /// sqrt(n)-scaled error budget of the representation for Delta_n.
  double reference_error(std::size_t n) const {
    if (mode_ == Mode::ClosedForm) return 0.0;
    return std::sqrt(static_cast<double>(n) / static_cast<double>(reference_size_));
  }

 private:
  Representation rep_;
  Mode mode_;
  std::size_t reference_size_;
  std::uint64_t seed_;
};

inline std::string to_string(Marginal::Mode m) {
  switch (m) {
    case Marginal::Mode::ClosedForm: return "closed_form";
    case Marginal::Mode::MixtureReference: return "mixture_reference";
    case Marginal::Mode::EmpiricalReference: return "empirical_reference";
  }
  return "unknown";
}

/// Closed-form marginal law when one exists.
inline std::optional<InnovationDistribution> closed_form_marginal(const ProcessModel& model) {
  const auto& e = model.innovation();
  if (model.kind() == ModelKind::Iid) {
    if (e.has_closed_density()) return e;
    return std::nullopt;
  }
  if (model.kind() != ModelKind::Linear) return std::nullopt;
  const auto a = model.coeffs();
  const double sum = std::accumulate(a.begin(), a.end(), 0.0);
  double sum_abs = 0.0, sum_sq = 0.0;
  for (double v : a) {
    sum_abs += std::abs(v);
    sum_sq += v * v;
  }
  if (sum_abs == 0.0) return std::nullopt;
  switch (e.kind()) {
    case InnovationKind::Gaussian:
      return InnovationDistribution::gaussian(e.param1() * sum, e.param2() * std::sqrt(sum_sq));
    case InnovationKind::Cauchy: return InnovationDistribution::cauchy(e.param1() * sum, e.param2() * sum_abs);
    case InnovationKind::SymmetricAlphaStable: {
      const double alpha = e.param1();
      if (alpha != 1.0 && alpha != 2.0) return std::nullopt;
      double s = 0.0;
      for (double v : a) s += std::pow(std::abs(v), alpha);
      return InnovationDistribution::stable(alpha, e.param2() * std::pow(s, 1.0 / alpha));
    }
    default: return std::nullopt;
  }
}

/// Stationary reference states Y (mixture mode) or values X (empirical mode),
/// sorted, from one long path seeded by `seed`.
inline std::vector<double> reference_sample(const ProcessModel& model, std::size_t m, std::uint64_t seed,
                                            bool states) {
  Stream stream(seed, {static_cast<std::uint64_t>(StreamTag::kReference)});
  auto path = simulate_path_with_states(model, m, stream);
  auto out = states ? std::move(path.states) : std::move(path.values);
  std::sort(out.begin(), out.end());
  return out;
}

inline Marginal build_marginal(const ProcessModel& model, const MarginalOptions& opt = {}) {
  if (auto law = closed_form_marginal(model)) return Marginal(ClosedFormCdf(*law), Marginal::Mode::ClosedForm);
  if (opt.reference_size < 1000) throw ConfigError("reference.size", "must be at least 1000");

  const bool mixture = model.additive() && model.step_law().light_tailed() && model.step_law().has_closed_density();
  std::vector<double> sample;
  if (opt.cache && std::filesystem::exists(*opt.cache)) {
    sample = load_reference_sample(*opt.cache);
    if (sample.size() != opt.reference_size) throw ConfigError("reference.cache", "cached size differs from reference.size");
  } else {
    sample = reference_sample(model, opt.reference_size, opt.seed, mixture);
    if (opt.cache) save_reference_sample(*opt.cache, sample);
  }

  if (mixture) {
    auto table = tabulate_mixture(sample, model.step_law(), opt.mixture_step);
    return Marginal(table.to_cdf(), Marginal::Mode::MixtureReference, opt.reference_size, opt.seed);
  }

  // Empirical reference: knots at every `thin`-th order statistic.
  const std::size_t m = sample.size();
  const std::size_t thin = std::max<std::size_t>(1, opt.empirical_thinning);
  std::vector<double> xs, ys;
  xs.push_back(sample.front());
  ys.push_back(0.0);
  for (std::size_t j = thin; j < m; j += thin) {
    if (sample[j - 1] > xs.back()) {
      xs.push_back(sample[j - 1]);
      ys.push_back(static_cast<double>(j) / static_cast<double>(m));
    }
  }
  if (sample.back() > xs.back()) {
    xs.push_back(sample.back());
    ys.push_back(1.0);
  } else {
    ys.back() = 1.0;
  }
  return Marginal(PiecewiseLinearCdf(std::move(xs), std::move(ys)), Marginal::Mode::EmpiricalReference,
                  opt.reference_size, opt.seed);
}

/// F(x), the marginal CDF at x.
inline double marginal_cdf(const Marginal& marginal, double x) { return marginal.cdf(x); }

}  // namespace osclab
