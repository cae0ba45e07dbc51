// osclab: command-line front end for the oscillation laboratory.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
// 3 capability error (the model cannot provide what the command needs).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "osclab/config.hpp"
#include "osclab/decomposition.hpp"
#include "osclab/dependence.hpp"
#include "osclab/experiments.hpp"
#include "osclab/innovations.hpp"
#include "osclab/oscillation.hpp"
#include "osclab/report.hpp"
#include "osclab/stats.hpp"
#include "selftest.hpp"

#ifndef OSCLAB_VERSION
#define OSCLAB_VERSION "dev"
#endif

namespace fs = std::filesystem;
using namespace osclab;

namespace {

enum Exit { kPass = 0, kCheckFailed = 1, kConfigError = 2, kCapabilityError = 3 };

struct Options {
  std::string config;
  std::string out = "osclab-out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string replay;
  bool force = false;
  bool verbose = false;
};

struct Outputs {
  std::vector<Check> checks;
  std::vector<std::string> files;
  bool complete = true;
  std::string kind;
  nlohmann::json extra = nlohmann::json::object();
};

// Console output rounds to 10 significant digits; files keep full precision.
std::string human(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void print_checks(const std::vector<Check>& checks) {
  for (const auto& c : checks) {
    std::printf("  %-24s %s", c.name.c_str(), c.status.c_str());
    for (const auto& [k, v] : c.numbers) std::printf("  %s=%s", k.c_str(), human(v).c_str());
    if (!c.message.empty()) std::printf("  (%s)", c.message.c_str());
    std::printf("\n");
  }
}

void print_aggregates(const ExperimentReport& rep) {
  std::printf("%-9s %-11s %-11s %-11s %-11s %-11s\n", "n", "b", "median_D", "D/rate", "D/stute", "g*/iota");
  for (const auto& a : rep.aggregates)
    std::printf("%-9zu %-11.5g %-11.5g %-11.5g %-11.5g %-11.5g\n", a.n, a.b, a.median_delta, a.median_ratio_sqrt,
                a.median_ratio_stute, a.median_gstar_iota);
}

Outputs finish_experiment(const ExperimentReport& rep, const fs::path& out) {
  write_raw_csv(rep, out / "raw.csv");
  write_aggregate_csv(rep, out / "aggregate.csv");
  Outputs o;
  o.kind = rep.kind;
  o.checks = rep.checks;
  o.complete = rep.complete;
  o.files = {"raw.csv", "aggregate.csv"};
  for (auto& f : write_experiment_plots(rep, out)) o.files.push_back(f);
  o.extra["model"] = rep.model;
  o.extra["marginal_mode"] = rep.marginal_mode;
  o.extra["bandwidth_rule"] = rep.bandwidth_rule;
  print_aggregates(rep);
  return o;
}

const ProcessModel& need_model(const RunConfig& cfg) {
  if (!cfg.model) throw ConfigError("model", "missing required key");
  return *cfg.model;
}

Outputs cmd_simulate(const RunConfig& cfg, const fs::path& out) {
  const auto& model = need_model(cfg);
  if (cfg.simulate_n == 0) throw ConfigError("simulate.n", "missing required key");
  Stream stream(cfg.seed, {static_cast<std::uint64_t>(StreamTag::kSample)});
  const auto path = simulate_path_with_states(model, cfg.simulate_n, stream);
  {
    CsvWriter w(out / "raw.csv", {"index", "value", "state"});
    for (std::size_t i = 0; i < path.values.size(); ++i) w << i + 1 << path.values[i] << path.states[i];
  }
  const double mean = stats::mean(path.values);
  const double sd = stats::stddev(path.values);
  double acf = 0.0, var = 0.0;
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    var += (path.values[i] - mean) * (path.values[i] - mean);
    if (i > 0) acf += (path.values[i] - mean) * (path.values[i - 1] - mean);
  }
  const double lag1 = var > 0.0 ? acf / var : 0.0;
  {
    CsvWriter w(out / "aggregate.csv", {"n", "mean", "sd", "min", "max", "lag1_autocorrelation"});
    w << path.values.size() << mean << sd << *std::min_element(path.values.begin(), path.values.end())
      << *std::max_element(path.values.begin(), path.values.end()) << lag1;
  }
  bool finite = true;
  for (double v : path.values) finite = finite && std::isfinite(v);
  std::printf("simulated %zu values: mean %s, sd %s, lag-1 autocorrelation %s\n", path.values.size(),
              human(mean).c_str(), human(sd).c_str(), human(lag1).c_str());
  Outputs o;
  o.kind = "simulate";
  o.checks.push_back({"finite", finite ? "pass" : "fail", {}, ""});
  o.files = {"raw.csv", "aggregate.csv"};
  return o;
}

Outputs cmd_oscillate(const RunConfig& cfg, const fs::path& out) {
  const auto& model = need_model(cfg);
  const auto& o = cfg.oscillate;
  if (!(o.b > 0.0)) throw ConfigError("oscillate", "missing required section");
  std::vector<double> values = o.sample;
  if (values.empty()) {
    Stream stream(cfg.seed, {static_cast<std::uint64_t>(StreamTag::kSample)});
    values = simulate_path(model, o.n, stream);
  }
  const SortedSample sample(values);
  const Marginal marginal = build_marginal(model, cfg.marginal);
  const auto parts = marginal.visit([&](const auto& F) { return oscillation_modulus_parts(sample, o.b, F); });
  const auto rec = make_record(sample.size(), o.b, parts.delta);
  std::printf("Delta_n(b) = %s  (n = %zu, b = %s, marginal %s)\n", human(parts.delta).c_str(), sample.size(),
              human(o.b).c_str(), to_string(marginal.mode()).c_str());
  {
    CsvWriter w(out / "raw.csv", {"n", "b", "delta", "up", "down", "slide", "rate_sqrt", "rate_stute", "rate_iota",
                                  "ratio_sqrt", "ratio_stute", "ratio_iota", "reference_error"});
    const double rn = std::sqrt(static_cast<double>(sample.size()));
    w << rec.n << rec.b << rec.delta << rn * parts.up << rn * parts.down << rn * parts.slide << rec.rate_sqrt
      << rec.rate_stute << rec.rate_iota << rec.ratio_sqrt << rec.ratio_stute << rec.ratio_iota
      << marginal.reference_error(sample.size());
  }
  Outputs out_;
  out_.kind = "oscillate";
  out_.files = {"raw.csv"};
  if (o.brute_force_step > 0.0) {
    const double bf =
        marginal.visit([&](const auto& F) { return oscillation_modulus_bruteforce(sample, o.b, F, o.brute_force_step); });
    const double nd = static_cast<double>(sample.size());
    const double bound = std::sqrt(nd) * nd * marginal.density_sup() * o.brute_force_step + 1e-9;
    const double gap = parts.delta - bf;
    std::printf("grid oracle = %s  (gap %s, allowed %s)\n", human(bf).c_str(), human(gap).c_str(),
                human(bound).c_str());
    out_.checks.push_back({"oracle_agreement", gap >= -1e-12 && gap <= bound ? "pass" : "fail",
                           {{"exact", parts.delta}, {"grid", bf}, {"gap", gap}, {"allowed", bound}}, ""});
    CsvWriter w(out / "aggregate.csv", {"n", "b", "delta", "grid_oracle", "gap", "allowed_gap"});
    w << sample.size() << o.b << parts.delta << bf << gap << bound;
    out_.files.push_back("aggregate.csv");
  }
  out_.checks.push_back({"range", parts.delta >= 0.0 && parts.delta <= 2.0 * std::sqrt(static_cast<double>(sample.size()))
                                      ? "pass" : "fail", {{"delta", parts.delta}}, ""});
  return out_;
}

Outputs cmd_dependence(const RunConfig& cfg, const fs::path& out, std::size_t threads) {
  const auto& model = need_model(cfg);
  const auto& d = cfg.dependence;
  Stream stream(cfg.seed, {static_cast<std::uint64_t>(StreamTag::kCoupling)});
  const auto profile = pdm_summability(model, d.alpha, d.lags, d.replicates, stream, threads);
  std::optional<Condition29Result> c29;
  std::string c29_note;
  if (d.cf_terms.value_or(true)) {
    try {
      c29 = condition29_partial_sum(model, d.lags, cfg.quadrature, d.replicates, stream, d.alpha, threads);
    } catch (const CapabilityError& e) {
      if (d.cf_terms) throw;  // explicitly requested: refuse
      c29_note = e.what();
    }
  }
  write_profile_csv(profile, c29 ? &*c29 : nullptr, out / "raw.csv");
  Outputs o;
  o.kind = "dependence";
  o.files = {"raw.csv", "aggregate.csv"};
  auto verdict_status = [](Verdict v) {
    return v == Verdict::Summable ? "pass" : v == Verdict::NotSummable ? "fail" : "inconclusive";
  };
  o.checks.push_back({"pdm_summability", verdict_status(profile.tail.verdict),
                      {{"total", profile.partial_sums.back()},
                       {"decay_slope", profile.decay_fit.slope},
                       {"tail_slope", profile.tail.fit.slope},
                       {"tail_r_squared", profile.tail.fit.r_squared}},
                      profile.tail.law + (profile.unreliable ? "; alpha reaches the tail index, moments infinite" : "")});
  std::printf("%-5s %-13s %-11s %-13s %-13s\n", "lag", "pdm", "stderr", "partial_sum", "cf_term");
  for (std::size_t k = 0; k < profile.lags.size(); ++k)
    std::printf("%-5zu %-13.6g %-11.3g %-13.6g %-13.6g\n", k, profile.pdm[k], profile.pdm_stderr[k],
                profile.partial_sums[k], c29 ? c29->terms[k] : kNaN);
  if (c29) {
    std::size_t violations = 0;
    for (std::size_t k = 0; k < c29->terms.size(); ++k) violations += c29->terms[k] > c29->bounds[k] * (1.0 + 1e-12);
    o.checks.push_back({"cf_bound_chain", violations == 0 ? "pass" : "fail", {{"violations", double(violations)}}, ""});
    o.checks.push_back({"cf_summability", verdict_status(c29->tail.verdict),
                        {{"total", c29->partial_sums.back()}, {"tail_slope", c29->tail.fit.slope}}, c29->tail.law});
  } else if (!c29_note.empty()) {
    o.checks.push_back({"cf_summability", "informational", {}, c29_note});
  }
  {
    CsvWriter w(out / "aggregate.csv", {"alpha", "lags", "replicates", "decay_slope", "decay_intercept", "decay_r_squared",
                                        "tail_law", "tail_slope", "tail_r_squared", "verdict", "total_pdm_pow",
                                        "total_cf_terms", "unreliable"});
    w << d.alpha << d.lags << d.replicates << profile.decay_fit.slope << profile.decay_fit.intercept
      << profile.decay_fit.r_squared << profile.tail.law << profile.tail.fit.slope << profile.tail.fit.r_squared
      << to_string(profile.tail.verdict) << profile.partial_sums.back() << (c29 ? c29->partial_sums.back() : kNaN)
      << profile.unreliable;
  }
  std::vector<double> lag(profile.lags.begin(), profile.lags.end());
  write_xy(out / "plot_pdm_summability.csv", lag, profile.partial_sums);
  o.files.push_back("plot_pdm_summability.csv");
  if (c29) {
    std::vector<double> ratio(c29->terms.size());
    for (std::size_t k = 0; k < ratio.size(); ++k) ratio[k] = c29->bounds[k] > 0.0 ? c29->terms[k] / c29->bounds[k] : 0.0;
    write_xy(out / "plot_cf_bound_chain.csv", lag, ratio);
    write_xy(out / "plot_cf_summability.csv", lag, c29->partial_sums);
    o.files.push_back("plot_cf_bound_chain.csv");
    o.files.push_back("plot_cf_summability.csv");
  }
  return o;
}

Outputs cmd_check_conditions(const RunConfig& cfg, const fs::path& out) {
  std::optional<InnovationDistribution> law = cfg.innovation;
  if (!law && cfg.model) law = cfg.model->innovation();
  if (!law) throw ConfigError("innovation", "give an innovation or a model");
  const double alpha = cfg.conditions_alpha;
  Outputs o;
  o.kind = "check-conditions";
  o.files = {"raw.csv"};
  CsvWriter w(out / "raw.csv", {"quantity", "value", "abs_error", "note"});

  const auto ci = cf_integrability(*law, alpha, cfg.quadrature);
  std::printf("cf integrability (alpha = %s): %s%s\n", human(alpha).c_str(), human(ci.value).c_str(),
              ci.finite ? "" : "  diverges");
  w << "cf_integrability" << ci.value << ci.abs_error << (ci.finite ? "finite" : "diverges");
  o.checks.push_back({"cf_integrability", ci.finite ? "pass" : "fail",
                      {{"value", ci.value}, {"abs_error", ci.abs_error}, {"cutoff", ci.cutoff}, {"alpha", alpha}}, ""});

  std::printf("density sup c0: %s\n", human(law->density_sup()).c_str());
  w << "density_sup" << law->density_sup() << 0.0 << "";
  o.checks.push_back({"density_bound", std::isfinite(law->density_sup()) ? "pass" : "fail",
                      {{"c0", law->density_sup()}}, ""});

  if (law->has_closed_density()) {
    try {
      const auto p = parseval_check(*law, cfg.quadrature);
      const double tol = law->kind() == InnovationKind::Uniform ? 1e-3 : 1e-6;
      std::printf("Parseval: %s vs %s (relative gap %s)\n", human(p.lhs).c_str(), human(p.rhs).c_str(),
                  human(p.relative_gap).c_str());
      w << "parseval_lhs" << p.lhs << 0.0 << "" << "parseval_rhs" << p.rhs << 0.0 << "";
      o.checks.push_back({"parseval", p.relative_gap < tol ? "pass" : "fail",
                          {{"lhs", p.lhs}, {"rhs", p.rhs}, {"relative_gap", p.relative_gap}, {"tolerance", tol}}, ""});
    } catch (const ConfigError& e) {
      o.checks.push_back({"parseval", "inconclusive", {}, e.what()});
    }
    const auto chain = density_bound_chain(*law, cfg.quadrature);
    w << "sup_density_sq" << chain.sup_density_sq << 0.0 << "" << "cf_side" << chain.cf_side << 0.0
      << (chain.finite ? "finite" : "diverges");
  }
  if (cfg.model && cfg.model->additive()) {
    const double c0 = conditional_density_bound(*cfg.model);
    w << "conditional_density_bound" << c0 << 0.0 << "";
    std::printf("conditional density bound: %s\n", human(c0).c_str());
  }
  return o;
}

int cmd_selftest() {
  int failed = 0;
  for (const auto& c : selftest::cases()) {
    bool ok = false;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      std::printf("  (%s threw: %s)\n", c.name.c_str(), e.what());
    }
    std::printf("%s  %s\n", ok ? "PASS" : "FAIL", c.name.c_str());
    failed += !ok;
  }
  std::printf("%d of %zu checks failed\n", failed, selftest::cases().size());
  return failed == 0 ? kPass : kCheckFailed;
}

const std::vector<std::string> kOutputs{"raw.csv", "aggregate.csv", "verdict.json", "run-manifest.json"};

void prepare_out(const fs::path& out, bool force) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("out", "cannot create " + out.string() + ": " + ec.message());
  if (force) return;
  for (const auto& f : kOutputs)
    if (fs::exists(out / f))
      throw ConfigError("out", (out / f).string() + " exists; pass --force to overwrite");
}

int run(const std::string& command, const Options& opt) {
  if (command == "selftest") return cmd_selftest();
  const auto t0 = std::chrono::steady_clock::now();

  std::string config_path = opt.config;
  std::optional<std::uint64_t> seed = opt.seed;
  std::optional<std::string> expected_hash;
  if (!opt.replay.empty()) {
    std::ifstream in(opt.replay);
    if (!in) throw ConfigError("replay", "cannot open " + opt.replay);
    nlohmann::json m;
    try {
      m = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("replay", std::string("invalid manifest: ") + e.what());
    }
    if (!m.contains("command") || !m.contains("config_path") || !m.contains("config_hash") || !m.contains("seed"))
      throw ConfigError("replay", "manifest lacks command, config_path, config_hash or seed");
    if (m["command"] != command)
      throw ConfigError("replay", "manifest was written by '" + m["command"].get<std::string>() + "'");
    if (config_path.empty()) config_path = m["config_path"].get<std::string>();
    seed = m["seed"].get<std::uint64_t>();
    expected_hash = m["config_hash"].get<std::string>();
  }
  if (config_path.empty()) throw ConfigError("config", "--config is required");
  RunConfig cfg = load_config(config_path);
  const std::string hash = hex64(config_hash(cfg.raw));
  if (expected_hash && *expected_hash != hash)
    throw ConfigError("replay", "config hash " + hash + " differs from the manifest's " + *expected_hash);
  if (seed) cfg.seed = *seed;
  const std::size_t threads = opt.threads ? *opt.threads : cfg.threads ? *cfg.threads : default_thread_count();

  const fs::path out(opt.out);
  prepare_out(out, opt.force);
  if (opt.verbose)
    std::fprintf(stderr, "config %s (hash %s), seed %llu, %zu threads, output %s\n", config_path.c_str(), hash.c_str(),
                 static_cast<unsigned long long>(cfg.seed), threads, out.string().c_str());

  Outputs o;
  if (command == "simulate") {
    o = cmd_simulate(cfg, out);
  } else if (command == "oscillate") {
    o = cmd_oscillate(cfg, out);
  } else if (command == "dependence") {
    o = cmd_dependence(cfg, out, threads);
  } else if (command == "check-conditions") {
    o = cmd_check_conditions(cfg, out);
  } else if (command == "rate") {
    o = finish_experiment(run_rate_experiment(to_experiment(cfg, threads)), out);
  } else if (command == "stute") {
    o = finish_experiment(run_stute_calibration(to_experiment(cfg, threads)), out);
  }
  print_checks(o.checks);

  write_json(verdict_json(cfg.label, o.kind, o.checks, o.complete), out / "verdict.json");
  nlohmann::json manifest;
  manifest["tool"] = "osclab";
  manifest["version"] = OSCLAB_VERSION;
  manifest["command"] = command;
  manifest["config_path"] = fs::absolute(config_path).string();
  manifest["config_hash"] = hash;
  manifest["seed"] = cfg.seed;
  manifest["threads"] = threads;
  manifest["wall_seconds"] = elapsed_since(t0);
  o.files.push_back("verdict.json");
  manifest["outputs"] = o.files;
  for (const auto& [k, v] : o.extra.items()) manifest[k] = v;
  write_json(manifest, out / "run-manifest.json");
  return checks_passed(o.checks) ? kPass : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"osclab: oscillation moduli of empirical processes for stationary causal processes"};
  app.set_version_flag("--version", std::string(OSCLAB_VERSION));
  app.require_subcommand(1);
  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "simulate one path of the configured model"},
      {"oscillate", "exact oscillation modulus of a given or simulated sample"},
      {"dependence", "physical dependence measures and the one-step cf series"},
      {"rate", "Monte Carlo rate experiment over an n-grid"},
      {"stute", "iid-uniform calibration against the sqrt(2) limit"},
      {"check-conditions", "cf integrability, Parseval and density bounds of an innovation law"},
      {"selftest", "closed-form and degenerate-case checks"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    if (name == "selftest") continue;
    sub->add_option("-c,--config", opt.config, "JSON configuration file");
    sub->add_option("-o,--out", opt.out, "output directory (created if absent)");
    sub->add_option("--seed", opt.seed, "override the configured master seed");
    sub->add_option("-j,--threads", opt.threads, "worker threads (default: OSCLAB_THREADS or all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--replay", opt.replay, "re-run from a run-manifest.json");
    sub->add_flag("-f,--force", opt.force, "overwrite existing outputs");
    sub->add_flag("-v,--verbose", opt.verbose, "print run details to stderr");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, opt);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kConfigError;
  } catch (const CapabilityError& e) {
    std::fprintf(stderr, "capability error: %s\n", e.what());
    return kCapabilityError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kCheckFailed;
  }
}
