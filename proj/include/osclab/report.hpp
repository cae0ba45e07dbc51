#pragma once

/// @file
/// CSV / JSON outputs. Floats are written as the shortest decimal string
/// that round-trips, so identical runs give identical bytes.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "osclab/dependence.hpp"
#include "osclab/error.hpp"
#include "osclab/experiments.hpp"

namespace osclab {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// A CSV file with a fixed header; fields are never quoted, so callers
/// keep commas and newlines out of text fields.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
      : out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw ConfigError("out", "cannot write " + path.string());
    bool first = true;
    for (auto h : header) {
      if (!first) out_ << ',';
      out_ << h;
      first = false;
    }
    out_ << '\n';
  }

  CsvWriter& operator<<(double v) { return field(format_double(v)); }
  CsvWriter& operator<<(std::size_t v) { return field(std::to_string(v)); }
  CsvWriter& operator<<(bool v) { return field(v ? "1" : "0"); }
  CsvWriter& operator<<(const std::string& v) { return field(sanitize(v)); }
  CsvWriter& operator<<(const char* v) { return field(sanitize(v)); }

 private:
  static std::string sanitize(std::string s) {
    for (char& c : s)
      if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
  }

  CsvWriter& field(const std::string& s) {
    if (col_ > 0) out_ << ',';
    out_ << s;
    if (++col_ == columns_) {
      out_ << '\n';
      col_ = 0;
    }
    return *this;
  }

  std::ofstream out_;
  std::size_t columns_;
  std::size_t col_ = 0;
};

inline void write_raw_csv(const ExperimentReport& rep, const std::filesystem::path& path) {
  CsvWriter w(path, {"label",       "n_index",    "n",           "replicate",  "b",
                     "delta",       "rate_sqrt",  "rate_stute",  "rate_iota",  "ratio_sqrt",
                     "ratio_stute", "ratio_iota", "decomposed",  "delta_circ", "delta_star",
                     "delta_star_cover", "sup_gstar", "b_sup_gstar", "gstar_iota", "slack",
                     "identity_error", "reference_error", "triangle_ok", "mvt_ok", "error"});
  for (const auto& r : rep.records) {
    w << rep.label << r.n_index << r.osc.n << r.replicate << r.osc.b << r.osc.delta << r.osc.rate_sqrt
      << r.osc.rate_stute << r.osc.rate_iota << r.osc.ratio_sqrt << r.osc.ratio_stute << r.osc.ratio_iota
      << r.decomposed << r.delta_circ << r.delta_star << r.delta_star_cover << r.sup_gstar << r.b_sup_gstar
      << r.gstar_iota << r.slack << r.identity_error << r.reference_error << r.triangle_ok << r.mvt_ok << r.error;
  }
}

inline void write_aggregate_csv(const ExperimentReport& rep, const std::filesystem::path& path) {
  CsvWriter w(path, {"label", "n", "b", "count", "median_delta", "iqr_delta", "median_ratio_sqrt", "iqr_ratio_sqrt",
                     "median_ratio_stute", "iqr_ratio_stute", "median_ratio_iota", "iqr_ratio_iota",
                     "median_delta_circ", "median_sup_gstar", "median_gstar_iota", "iqr_gstar_iota"});
  for (const auto& a : rep.aggregates) {
    w << rep.label << a.n << a.b << a.count << a.median_delta << a.iqr_delta << a.median_ratio_sqrt
      << a.iqr_ratio_sqrt << a.median_ratio_stute << a.iqr_ratio_stute << a.median_ratio_iota << a.iqr_ratio_iota
      << a.median_delta_circ << a.median_sup_gstar << a.median_gstar_iota << a.iqr_gstar_iota;
  }
}

inline nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline nlohmann::json checks_json(const std::vector<Check>& checks) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& c : checks) {
    nlohmann::json j;
    j["status"] = c.status;
    for (const auto& [k, v] : c.numbers) j[k] = number_or_null(v);
    if (!c.message.empty()) j["message"] = c.message;
    out[c.name] = j;
  }
  return out;
}

inline bool checks_passed(const std::vector<Check>& checks) {
  for (const auto& c : checks)
    if (c.status == "fail") return false;
  return true;
}

inline nlohmann::json verdict_json(const std::string& label, const std::string& kind, const std::vector<Check>& checks,
                                   bool complete = true) {
  nlohmann::json v;
  v["label"] = label;
  v["kind"] = kind;
  v["passed"] = checks_passed(checks);
  v["complete"] = complete;
  v["checks"] = checks_json(checks);
  return v;
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("out", "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Two-column x,y curve for plotting.
inline void write_xy(const std::filesystem::path& path, const std::vector<double>& x, const std::vector<double>& y) {
  CsvWriter w(path, {"x", "y"});
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) w << x[i] << y[i];
}

/// One plot file per check of an experiment report; returns the file names.
inline std::vector<std::string> write_experiment_plots(const ExperimentReport& rep, const std::filesystem::path& dir) {
  std::vector<std::string> files;
  std::vector<double> n, y;
  auto per_n = [&](auto value) {
    n.clear();
    y.clear();
    for (const auto& a : rep.aggregates) {
      n.push_back(static_cast<double>(a.n));
      y.push_back(value(a));
    }
  };
  auto per_n_records = [&](auto value) {
    n.clear();
    y.clear();
    for (std::size_t i = 0; i < rep.n_grid.size(); ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (const auto& r : rep.records)
        if (r.n_index == i && r.error.empty()) m = std::max(m, value(r));
      n.push_back(static_cast<double>(rep.n_grid[i]));
      y.push_back(m);
    }
  };
  for (const auto& c : rep.checks) {
    if (c.name == "regime") {
      n.clear();
      y.clear();
      for (std::size_t i = 0; i < rep.n_grid.size(); ++i) {
        const double nd = static_cast<double>(rep.n_grid[i]);
        n.push_back(nd);
        y.push_back(nd * rep.b_grid[i] / std::log(nd));
      }
    } else if (c.name == "ratio_bounded") {
      per_n([](const Aggregate& a) { return a.median_ratio_sqrt; });
    } else if (c.name == "rate_slope") {
      n.clear();
      y.clear();
      for (const auto& a : rep.aggregates) {
        n.push_back(std::log(rate_sqrt(static_cast<double>(a.n), a.b)));
        y.push_back(std::log(a.median_delta));
      }
    } else if (c.name == "gstar_trend") {
      per_n([](const Aggregate& a) { return a.median_gstar_iota; });
    } else if (c.name == "stute_band" || c.name == "stute_trend") {
      per_n([](const Aggregate& a) { return a.median_ratio_stute; });
    } else if (c.name == "ratio_positive") {
      per_n_records([](const RateRecord& r) { return -r.osc.ratio_stute; });
      for (auto& v : y) v = -v;
    } else if (c.name == "stute_paired") {
      n.clear();
      y.clear();
      const std::size_t R = rep.replicates, G = rep.n_grid.size();
      for (std::size_t r = 0; r < R; ++r) {
        n.push_back(rep.records[r].osc.ratio_stute);
        y.push_back(rep.records[(G - 1) * R + r].osc.ratio_stute);
      }
    } else if (c.name == "decomposition_triangle") {
      per_n_records([](const RateRecord& r) { return r.osc.delta - r.delta_circ - r.delta_star_cover - r.slack; });
    } else if (c.name == "decomposition_mvt") {
      per_n_records([](const RateRecord& r) { return r.b_sup_gstar > 0.0 ? r.delta_star / r.b_sup_gstar : 0.0; });
    } else if (c.name == "decomposition_identity") {
      per_n_records([](const RateRecord& r) { return r.identity_error; });
    } else {
      continue;
    }
    const std::string file = "plot_" + c.name + ".csv";
    write_xy(dir / file, n, y);
    files.push_back(file);
  }
  return files;
}

inline void write_profile_csv(const DependenceProfile& p, const Condition29Result* c29,
                              const std::filesystem::path& path) {
  CsvWriter w(path, {"lag", "pdm", "stderr", "pdm_pow", "partial_sum", "cf_term", "cf_bound", "cf_partial_sum"});
  for (std::size_t i = 0; i < p.lags.size(); ++i) {
    const bool has = c29 && i < c29->terms.size();
    w << p.lags[i] << p.pdm[i] << p.pdm_stderr[i] << p.pdm_pow[i] << p.partial_sums[i]
      << (has ? c29->terms[i] : kNaN) << (has ? c29->bounds[i] : kNaN) << (has ? c29->partial_sums[i] : kNaN);
  }
}

}  // namespace osclab
