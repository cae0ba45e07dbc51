#pragma once

/// @file
/// JSON run configuration: parsing, validation and hashing.
/// Every error names the offending key as a dotted path.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "osclab/error.hpp"
#include "osclab/experiments.hpp"
#include "osclab/innovations.hpp"
#include "osclab/process_models.hpp"
#include "osclab/quadrature.hpp"

namespace osclab {

using json = nlohmann::json;

namespace detail {

// A JSON object under a dotted path; remembers which keys were read so the
// rest can be rejected as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return as<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(key_path(key), "missing required key");
    return as<T>(key);
  }

  Section sub(const std::string& key) {
    if (!has(key)) throw ConfigError(key_path(key), "missing required key");
    return Section(raw(key), key_path(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(key_path(k), "unknown key");
  }

 private:
  template <class T>
  T as(const std::string& key) {
    const json& v = raw(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(key_path(key), "expected true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(key_path(key), "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
      return v.get<double>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<std::int64_t>() < 0 && !v.is_number_unsigned()))
        throw ConfigError(key_path(key), "expected a non-negative integer");
      return v.get<T>();
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!v.is_array()) throw ConfigError(key_path(key), "expected an array of numbers");
      std::vector<double> out;
      for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(key_path(key), "expected an array of numbers");
        out.push_back(e.get<double>());
      }
      return out;
    } else {
      static_assert(sizeof(T) == 0, "unsupported config type");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Re-roots an error key raised by a factory ("innovation.sd", "model.a")
// under the section it came from.
inline std::string reroot(const std::string& prefix, const std::string& key, const std::string& own) {
  const auto dot = key.find('.');
  const std::string head = dot == std::string::npos ? key : key.substr(0, dot);
  if (head == own) return prefix + (dot == std::string::npos ? "" : key.substr(dot));
  return prefix + "." + key;
}

}  // namespace detail

inline InnovationDistribution parse_innovation(const json& j, const std::string& path) {
  detail::Section s(j, path);
  const auto kind = s.require<std::string>("kind");
  try {
    InnovationDistribution d = InnovationDistribution::gaussian(0.0, 1.0);
    if (kind == "gaussian") {
      d = InnovationDistribution::gaussian(s.get("mean", 0.0), s.get("sd", 1.0));
    } else if (kind == "uniform") {
      d = InnovationDistribution::uniform(s.get("lo", 0.0), s.get("hi", 1.0));
    } else if (kind == "cauchy") {
      d = InnovationDistribution::cauchy(s.get("loc", 0.0), s.get("scale", 1.0));
    } else if (kind == "stable") {
      d = InnovationDistribution::stable(s.require<double>("alpha"), s.get("scale", 1.0));
    } else {
      throw ConfigError(s.key_path("kind"), "unknown innovation kind '" + kind + "' (gaussian, uniform, cauchy, stable)");
    }
    s.finish();
    return d;
  } catch (const ConfigError& e) {
    if (e.key().rfind(path, 0) == 0) throw;
    throw ConfigError(detail::reroot(path, e.key(), "innovation"), e.message());
  }
}

inline ProcessModel parse_model(const json& j, const std::string& path = "model") {
  detail::Section s(j, path);
  const auto kind = s.require<std::string>("kind");
  const auto innovation = parse_innovation(s.raw("innovation"), s.key_path("innovation"));
  try {
    std::optional<std::size_t> burn_in;
    if (s.has("burn_in")) burn_in = s.get<std::size_t>("burn_in", 0);
    std::optional<ProcessModel> m;
    if (kind == "iid") {
      m = ProcessModel::iid(innovation);
    } else if (kind == "linear") {
      std::vector<double> coeffs;
      if (s.has("coeffs")) coeffs = s.get<std::vector<double>>("coeffs", {});
      if (s.has("geometric")) {
        if (!coeffs.empty()) throw ConfigError(s.key_path("geometric"), "give either coeffs or geometric, not both");
        detail::Section g = s.sub("geometric");
        const double rho = g.require<double>("rho");
        const auto length = g.require<std::size_t>("length");
        g.finish();
        if (length < 1) throw ConfigError(g.key_path("length"), "must be at least 1");
        for (std::size_t k = 0; k < length; ++k) coeffs.push_back(std::pow(rho, static_cast<double>(k)));
      }
      if (coeffs.empty()) throw ConfigError(s.key_path("coeffs"), "linear models need coeffs or geometric");
      m = ProcessModel::linear(std::move(coeffs), innovation);
    } else if (kind == "recursive") {
      auto map = named_recursive_map(s.require<std::string>("map"), s.require<double>("scale"));
      m = ProcessModel::recursive(std::move(map), innovation, burn_in);
    } else if (kind == "tar") {
      m = ProcessModel::threshold_ar(s.require<double>("a"), s.require<double>("b"), innovation, burn_in);
    } else {
      throw ConfigError(s.key_path("kind"), "unknown model kind '" + kind + "' (iid, linear, recursive, tar)");
    }
    s.finish();
    return *m;
  } catch (const ConfigError& e) {
    if (e.key().rfind(path, 0) == 0) throw;
    throw ConfigError(detail::reroot(path, e.key(), "model"), e.message());
  }
}

struct DependenceSettings {
  double alpha = 2.0;
  std::size_t lags = 12;
  std::size_t replicates = 2000;
  std::optional<bool> cf_terms;  ///< unset: compute when the model allows it
};

struct OscillateSettings {
  std::vector<double> sample;  ///< explicit sample; otherwise simulate n values
  std::size_t n = 0;
  double b = 0.0;
  double brute_force_step = 0.0;  ///< > 0: also run the grid oracle
};

/// A validated run configuration. Sections that a subcommand does not use
/// are still validated.
struct RunConfig {
  json raw;
  std::string label = "run";
  std::uint64_t seed = 1;
  std::optional<std::size_t> threads;
  std::optional<ProcessModel> model;
  std::optional<InnovationDistribution> innovation;  ///< check-conditions without a model
  std::vector<std::size_t> n_grid;
  BandwidthRule bandwidth;
  std::size_t replicates = 20;
  MarginalOptions marginal;
  ExperimentConfig checks;  ///< tolerance fields only
  DependenceSettings dependence;
  OscillateSettings oscillate;
  std::size_t simulate_n = 0;
  double conditions_alpha = 1.0;
  QuadratureSpec quadrature;
};

namespace detail {

inline std::vector<std::size_t> parse_n_grid(Section& s) {
  std::vector<std::size_t> grid;
  const json& v = s.raw("n_grid");
  const std::string key = s.key_path("n_grid");
  if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 1) throw ConfigError(key, "expected positive integers");
      grid.push_back(e.get<std::size_t>());
    }
  } else {
    Section g(v, key);
    const auto from = g.require<std::size_t>("log2_from");
    const auto to = g.require<std::size_t>("log2_to");
    g.finish();
    if (from < 1 || to > 40 || from > to) throw ConfigError(key, "needs 1 <= log2_from <= log2_to <= 40");
    for (std::size_t k = from; k <= to; ++k) grid.push_back(std::size_t{1} << k);
  }
  for (std::size_t n : grid)
    if (n < 2 || (n & (n - 1)) != 0) throw ConfigError(key, "entries must be powers of two, at least 2");
  return grid;
}

inline BandwidthRule parse_bandwidth(Section& parent) {
  Section s = parent.sub("bandwidth");
  const auto rule = s.require<std::string>("rule");
  BandwidthRule out;
  if (rule == "power_law") {
    out = BandwidthRule::power_law(s.get("eta", 0.5));
  } else if (rule == "explicit") {
    out = BandwidthRule::explicit_list(s.require<std::vector<double>>("values"));
  } else if (rule == "inverse_log") {
    out = BandwidthRule::inverse_log(s.get("scale", 1.0));
    if (!(out.scale > 0.0)) throw ConfigError(s.key_path("scale"), "must be positive");
  } else {
    throw ConfigError(s.key_path("rule"), "unknown rule '" + rule + "' (power_law, explicit, inverse_log)");
  }
  s.finish();
  return out;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  RunConfig c;
  c.raw = j;
  detail::Section s(j, "");
  c.label = s.get<std::string>("label", c.label);
  c.seed = s.get<std::uint64_t>("seed", c.seed);
  if (s.has("threads")) c.threads = s.get<std::size_t>("threads", 0);
  if (s.has("model")) c.model = parse_model(s.raw("model"));
  if (s.has("innovation")) c.innovation = parse_innovation(s.raw("innovation"), "innovation");
  if (s.has("n_grid")) c.n_grid = detail::parse_n_grid(s);
  if (s.has("bandwidth")) c.bandwidth = detail::parse_bandwidth(s);
  c.replicates = s.get<std::size_t>("replicates", c.replicates);
  if (c.replicates < 1) throw ConfigError("replicates", "must be at least 1");

  if (s.has("marginal")) {
    detail::Section m = s.sub("marginal");
    c.marginal.reference_size = m.get<std::size_t>("reference_size", c.marginal.reference_size);
    c.marginal.seed = m.get<std::uint64_t>("seed", c.marginal.seed);
    c.marginal.mixture_step = m.get("mixture_step", c.marginal.mixture_step);
    if (m.has("cache")) c.marginal.cache = m.get<std::string>("cache", "");
    m.finish();
    if (!(c.marginal.mixture_step > 0.0) || std::exp2(std::round(std::log2(c.marginal.mixture_step))) != c.marginal.mixture_step)
      throw ConfigError("marginal.mixture_step", "must be a power of two");
  }

  if (s.has("checks")) {
    detail::Section k = s.sub("checks");
    auto& e = c.checks;
    e.decomposition = k.get("decomposition", e.decomposition);
    e.check_rate_slope = k.get("rate_slope", e.check_rate_slope);
    e.rate_slope_tolerance = k.get("rate_slope_tolerance", e.rate_slope_tolerance);
    e.ratio_bound_factor = k.get("ratio_bound_factor", e.ratio_bound_factor);
    e.gstar_slope_max = k.get("gstar_slope_max", e.gstar_slope_max);
    e.stute_paired_min = k.get("stute_paired_min", e.stute_paired_min);
    if (k.has("stute_band")) {
      const auto band = k.get<std::vector<double>>("stute_band", {});
      if (band.size() != 2 || !(band[0] < band[1])) throw ConfigError("checks.stute_band", "expected [lo, hi] with lo < hi");
      e.stute_band_lo = band[0];
      e.stute_band_hi = band[1];
    }
    k.finish();
  }

  if (s.has("dependence")) {
    detail::Section d = s.sub("dependence");
    c.dependence.alpha = d.get("alpha", c.dependence.alpha);
    c.dependence.lags = d.get<std::size_t>("lags", c.dependence.lags);
    c.dependence.replicates = d.get<std::size_t>("replicates", c.dependence.replicates);
    if (d.has("cf_terms")) c.dependence.cf_terms = d.get("cf_terms", true);
    d.finish();
    if (!(c.dependence.alpha > 0.0 && c.dependence.alpha <= 2.0)) throw ConfigError("dependence.alpha", "must lie in (0, 2]");
    if (c.dependence.lags < 4) throw ConfigError("dependence.lags", "must be at least 4");
    if (c.dependence.replicates < 100) throw ConfigError("dependence.replicates", "must be at least 100");
  }

  if (s.has("oscillate")) {
    detail::Section o = s.sub("oscillate");
    if (o.has("sample")) c.oscillate.sample = o.get<std::vector<double>>("sample", {});
    c.oscillate.n = o.get<std::size_t>("n", 0);
    c.oscillate.b = o.require<double>("b");
    c.oscillate.brute_force_step = o.get("brute_force_step", 0.0);
    o.finish();
    if (c.oscillate.sample.empty() && c.oscillate.n == 0) throw ConfigError("oscillate.n", "give a sample or a positive n");
    if (!(c.oscillate.b > 0.0)) throw ConfigError("oscillate.b", "must be positive");
    if (c.oscillate.brute_force_step < 0.0) throw ConfigError("oscillate.brute_force_step", "must be non-negative");
  }

  if (s.has("simulate")) {
    detail::Section m = s.sub("simulate");
    c.simulate_n = m.require<std::size_t>("n");
    m.finish();
    if (c.simulate_n < 1) throw ConfigError("simulate.n", "must be at least 1");
  }

  if (s.has("conditions")) {
    detail::Section m = s.sub("conditions");
    c.conditions_alpha = m.get("alpha", c.conditions_alpha);
    m.finish();
    if (!(c.conditions_alpha > 0.0 && c.conditions_alpha <= 2.0)) throw ConfigError("conditions.alpha", "must lie in (0, 2]");
  }

  if (s.has("quadrature")) {
    detail::Section q = s.sub("quadrature");
    c.quadrature.cutoff = q.get("cutoff", c.quadrature.cutoff);
    c.quadrature.rel_tol = q.get("rel_tol", c.quadrature.rel_tol);
    c.quadrature.abs_tol = q.get("abs_tol", c.quadrature.abs_tol);
    q.finish();
    if (c.quadrature.cutoff < 0.0) throw ConfigError("quadrature.cutoff", "must be non-negative (0 selects automatically)");
  }
  s.finish();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

/// ExperimentConfig for the rate / calibration / trend runners.
inline ExperimentConfig to_experiment(const RunConfig& c, std::size_t threads) {
  if (!c.model) throw ConfigError("model", "missing required key");
  if (c.n_grid.empty()) throw ConfigError("n_grid", "missing required key");
  ExperimentConfig e = c.checks;
  e.label = c.label;
  e.model = *c.model;
  e.n_grid = c.n_grid;
  e.bandwidth = c.bandwidth;
  e.replicates = c.replicates;
  e.seed = c.seed;
  e.threads = threads;
  e.marginal = c.marginal;
  return e;
}

/// FNV-1a over the canonical (sorted-key, compact) serialization.
inline std::uint64_t config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace osclab
