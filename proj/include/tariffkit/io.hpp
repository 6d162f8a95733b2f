#pragma once

// File formats: deal CSV, schedule/fit/scenario JSON, plot-data CSV and the
// flat key=value run config. Every JSON document carries format_version.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tariffkit/counterfactual.hpp"
#include "tariffkit/errors.hpp"
#include "tariffkit/estimation.hpp"
#include "tariffkit/market_model.hpp"
#include "tariffkit/profit.hpp"
#include "tariffkit/tariff.hpp"

namespace tariffkit {

inline constexpr int kFormatVersion = 1;

class IngestError : public ConfigError {
 public:
  IngestError(std::size_t row, std::string column, const std::string& what)
      : ConfigError("row " + std::to_string(row) + ", column '" + column + "': " + what),
        row_(row),
        column_(std::move(column)) {}
  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

// ---------------------------------------------------------------------------
// number formatting

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double x) {
  if (x == 0.0) return "0";  // also folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double round_cents(double x) {
  const double r = std::round(x * 100.0) / 100.0;
  return r == 0.0 ? 0.0 : r;
}

// ---------------------------------------------------------------------------
// CSV

namespace csv {

/// Splits one line; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace csv

inline const std::vector<std::string>& deal_columns() {
  static const std::vector<std::string> cols{"id", "year", "size", "success", "unit_price", "snc"};
  return cols;
}

struct IngestResult {
  std::vector<CustomerRecord> records;
  std::vector<std::string> covariate_names;  // columns kept, file order
  std::vector<std::string> ignored_columns;
  std::vector<std::string> warnings;
};

namespace detail {

inline double parse_number(const std::string& s, std::size_t row, const std::string& col) {
  const std::string t = csv::trim(s);
  if (t.empty()) throw IngestError(row, col, "missing value");
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v))
    throw IngestError(row, col, "not a finite number: '" + t + "'");
  return v;
}

inline int parse_int(const std::string& s, std::size_t row, const std::string& col) {
  const std::string t = csv::trim(s);
  int v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw IngestError(row, col, "not an integer: '" + t + "'");
  return v;
}

inline bool parse_flag(const std::string& s, std::size_t row, const std::string& col) {
  const std::string t = csv::trim(s);
  if (t == "1" || t == "true" || t == "TRUE") return true;
  if (t == "0" || t == "false" || t == "FALSE") return false;
  throw IngestError(row, col, "expected 0/1: '" + t + "'");
}

}  // namespace detail

/// Reads deal records. Rows are numbered from 1 after the header. With
/// `expected_covariates` set, other extra columns are ignored with a warning;
/// otherwise every extra column is a covariate.
inline IngestResult read_deals_csv(std::istream& in,
                                   const std::optional<std::vector<std::string>>& expected_covariates =
                                       std::nullopt) {
  IngestResult out;
  std::string line;
  if (!std::getline(in, line)) throw IngestError(0, "header", "empty file");
  std::vector<std::string> header = csv::split(line);
  for (auto& h : header) h = csv::trim(h);
  const auto& fixed = deal_columns();
  if (header.size() < fixed.size()) throw IngestError(0, "header", "expected columns id,year,size,success,unit_price,snc");
  for (std::size_t j = 0; j < fixed.size(); ++j)
    if (header[j] != fixed[j])
      throw IngestError(0, header[j], "expected column '" + fixed[j] + "'");

  std::vector<std::pair<std::size_t, std::string>> keep;
  std::set<std::string> seen(header.begin(), header.begin() + static_cast<std::ptrdiff_t>(fixed.size()));
  for (std::size_t j = fixed.size(); j < header.size(); ++j) {
    const std::string& name = header[j];
    if (name.empty()) throw IngestError(0, "header", "empty column name");
    if (!seen.insert(name).second) throw IngestError(0, name, "duplicate column");
    const bool wanted = !expected_covariates ||
                        std::find(expected_covariates->begin(), expected_covariates->end(), name) !=
                            expected_covariates->end();
    if (wanted) {
      keep.emplace_back(j, name);
      out.covariate_names.push_back(name);
    } else {
      out.ignored_columns.push_back(name);
    }
  }
  if (!out.ignored_columns.empty()) {
    std::string msg = "ignored unknown covariate columns:";
    for (const auto& c : out.ignored_columns) msg += " " + c;
    out.warnings.push_back(msg);
  }
  if (expected_covariates)
    for (const auto& want : *expected_covariates)
      if (std::find(out.covariate_names.begin(), out.covariate_names.end(), want) ==
          out.covariate_names.end())
        throw IngestError(0, want, "expected covariate column is missing");

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    ++row;
    const auto f = csv::split(line);
    if (f.size() != header.size())
      throw IngestError(row, "*", "expected " + std::to_string(header.size()) + " fields, found " +
                                      std::to_string(f.size()));
    CustomerRecord r;
    r.id = csv::trim(f[0]);
    if (r.id.empty()) throw IngestError(row, "id", "missing value");
    r.year = detail::parse_int(f[1], row, "year");
    r.size = detail::parse_int(f[2], row, "size");
    if (r.size < 1) throw IngestError(row, "size", "size must be >= 1");
    r.success = detail::parse_flag(f[3], row, "success");
    r.observed_unit_price = detail::parse_number(f[4], row, "unit_price");
    if (r.observed_unit_price < 0.0) throw IngestError(row, "unit_price", "must be nonnegative");
    r.snc_value = detail::parse_number(f[5], row, "snc");
    if (r.snc_value < 0.0) throw IngestError(row, "snc", "must be nonnegative");
    for (const auto& [j, name] : keep) r.covariates[name] = detail::parse_number(f[j], row, name);
    try {
      validate(r);
    } catch (const std::exception& e) {
      throw IngestError(row, "*", e.what());
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

inline IngestResult read_deals_csv(const std::string& path,
                                   const std::optional<std::vector<std::string>>& expected_covariates =
                                       std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return read_deals_csv(in, expected_covariates);
}

/// Covariate columns default to the sorted union over the records.
inline void write_deals_csv(std::ostream& os, const std::vector<CustomerRecord>& records,
                            std::vector<std::string> covariate_names = {}) {
  if (covariate_names.empty()) {
    std::set<std::string> names;
    for (const auto& r : records)
      for (const auto& [k, v] : r.covariates) names.insert(k);
    covariate_names.assign(names.begin(), names.end());
  }
  const auto& fixed = deal_columns();
  for (std::size_t j = 0; j < fixed.size(); ++j) os << (j ? "," : "") << fixed[j];
  for (const auto& c : covariate_names) os << ',' << csv::quote(c);
  os << '\n';
  for (const auto& r : records) {
    os << csv::quote(r.id) << ',' << r.year << ',' << r.size << ',' << (r.success ? 1 : 0) << ','
       << format_double(r.observed_unit_price) << ',' << format_double(r.snc_value);
    for (const auto& c : covariate_names) {
      const auto it = r.covariates.find(c);
      if (it == r.covariates.end()) throw ConfigError("record " + r.id + " lacks covariate " + c);
      os << ',' << format_double(it->second);
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// JSON

using Json = nlohmann::json;

namespace detail {

inline void check_version(const Json& j, std::string_view what) {
  if (!j.contains("format_version"))
    throw ConfigError(std::string(what) + ": missing format_version");
  if (j.at("format_version").get<int>() != kFormatVersion)
    throw ConfigError(std::string(what) + ": unsupported format_version");
}

}  // namespace detail

inline Json to_json(const PriceSchedule& p) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = std::string(to_string(p.kind));
  j["bins"] = p.bins.starts();
  j["rates"] = p.rates;
  j["fixed_fee"] = p.fixed_fee;
  return j;
}

inline PriceSchedule schedule_from_json(const Json& j) {
  detail::check_version(j, "schedule");
  const ScheduleKind kind = parse_schedule_kind(j.at("kind").get<std::string>());
  const double fee = j.value("fixed_fee", 0.0);
  const auto rates = j.at("rates").get<std::vector<double>>();
  switch (kind) {
    case ScheduleKind::linear:
      if (fee != 0.0) throw ConfigError("linear schedules carry no fee");
      return PriceSchedule::linear(rates.at(0));
    case ScheduleKind::two_part: return PriceSchedule::two_part(fee, rates.at(0));
    case ScheduleKind::via_origin:
      return PriceSchedule::via_origin(Bins{j.at("bins").get<std::vector<int>>()}, rates, fee);
    case ScheduleKind::continuous:
      return PriceSchedule::continuous(Bins{j.at("bins").get<std::vector<int>>()}, rates, fee);
    case ScheduleKind::individualized: return PriceSchedule::individualized();
  }
  throw ConfigError("unknown schedule kind");
}

inline Json to_json(const ValueModel& m) {
  Json j;
  j["beta"] = m.beta;
  Json years = Json::object();
  for (const auto& [y, a] : m.year_effects) years[std::to_string(y)] = a;
  j["year_effects"] = years;
  j["estimation_bins"] = m.estimation_bins.starts();
  j["size_effects"] = m.size_effects;
  j["sigma"] = m.sigma;
  j["error_family"] = std::string(to_string(m.error_family));
  j["smoothness"] = m.smoothness;
  return j;
}

inline ValueModel value_model_from_json(const Json& j) {
  ValueModel m;
  m.beta = j.at("beta").get<std::map<std::string, double>>();
  for (const auto& [k, v] : j.at("year_effects").items()) m.year_effects[std::stoi(k)] = v.get<double>();
  m.estimation_bins = Bins{j.at("estimation_bins").get<std::vector<int>>()};
  m.size_effects = j.at("size_effects").get<std::vector<double>>();
  m.sigma = j.at("sigma").get<double>();
  m.error_family = parse_error_family(j.at("error_family").get<std::string>());
  m.smoothness = j.value("smoothness", 1.0);
  validate(m, true);
  return m;
}

inline Json to_json(const FitResult& f) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["value_model"] = to_json(f.value_model);
  j["neg_log_likelihood"] = f.neg_log_likelihood;
  j["converged"] = f.converged;
  j["separated"] = f.separated;
  j["sigma_at_floor"] = f.sigma_at_floor;
  j["iterations"] = f.iterations;
  j["gradient_norm"] = f.gradient_norm;
  Json params = Json::array();
  for (std::size_t k = 0; k < f.parameters.size(); ++k) {
    Json p;
    p["name"] = f.parameter_names[k];
    p["estimate"] = f.parameters[k];
    if (k < f.standard_errors.size()) p["std_error"] = f.standard_errors[k];
    params.push_back(p);
  }
  j["parameters"] = params;
  Json pmf = Json::object();
  for (const auto& [q, w] : f.size_pmf) pmf[std::to_string(q)] = w;
  j["size_pmf"] = pmf;
  j["warnings"] = f.warnings;
  return j;
}

inline ValueModel fit_model_from_json(const Json& j) {
  detail::check_version(j, "fit");
  return value_model_from_json(j.at("value_model"));
}

inline Json to_json(const CostParams& c) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["c1"] = c.c1;
  j["c2"] = c.c2;
  return j;
}

inline CostParams costs_from_json(const Json& j) {
  detail::check_version(j, "costs");
  CostParams c{j.at("c1").get<double>(), j.at("c2").get<double>()};
  validate(c);
  return c;
}

inline Json to_json(const ScenarioResult& s) {
  Json j;
  j["scheme"] = s.label;
  j["profit"] = round_cents(s.profit);
  j["revenue"] = round_cents(s.revenue);
  j["cost"] = round_cents(s.cost);
  j["consumer_welfare"] = round_cents(s.consumer_welfare);
  j["social_welfare"] = round_cents(s.social_welfare);
  j["expected_buyers"] = s.expected_buyers;
  if (s.profit_ci) j["profit_ci"] = {round_cents(s.profit_ci->first), round_cents(s.profit_ci->second)};
  Json seg = Json::array();
  for (const auto& g : s.per_segment) {
    Json e;
    e["bin_start"] = g.bin_start;
    e["profit"] = round_cents(g.profit);
    e["revenue"] = round_cents(g.revenue);
    e["consumer_welfare"] = round_cents(g.consumer_surplus);
    e["expected_buyers"] = g.expected_buyers;
    seg.push_back(e);
  }
  j["per_segment"] = seg;
  return j;
}

inline std::string cents(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", round_cents(x));
  return buf;
}

/// One row per scheme: profit, revenue, consumer and social welfare.
inline void write_scenarios_csv(std::ostream& os, const std::vector<ScenarioResult>& rs) {
  os << "scheme,profit,revenue,consumer_welfare,social_welfare\n";
  for (const auto& s : rs)
    os << csv::quote(s.label) << ',' << cents(s.profit) << ',' << cents(s.revenue) << ','
       << cents(s.consumer_welfare) << ',' << cents(s.social_welfare) << '\n';
}

/// One row per (scheme, size group).
inline void write_segments_csv(std::ostream& os, const std::vector<ScenarioResult>& rs) {
  os << "scheme,bin_start,profit,revenue,consumer_welfare,social_welfare,expected_buyers\n";
  for (const auto& s : rs)
    for (const auto& g : s.per_segment)
      os << csv::quote(s.label) << ',' << g.bin_start << ',' << cents(g.profit) << ','
         << cents(g.revenue) << ',' << cents(g.consumer_surplus) << ','
         << cents(g.profit + g.consumer_surplus) << ',' << format_double(g.expected_buyers)
         << '\n';
}

struct PlotSeries {
  std::string scheme;
  PriceSchedule schedule;
  std::vector<std::pair<double, double>> ci;  // per pricing bin; empty when none
};

/// Long-format marginal prices: one row per scheme and pricing bin, priced
/// at the bin's first positive size.
inline void emit_plot_data(std::ostream& os, const std::vector<PlotSeries>& series,
                           const Bins& bins) {
  os << "scheme,size,marginal_price,ci_lo,ci_hi\n";
  for (const auto& s : series) {
    if (!s.ci.empty() && s.ci.size() != bins.size())
      throw ConfigError("plot CI needs one interval per bin");
    for (std::size_t k = 0; k < bins.size(); ++k) {
      const int q = std::max(1, bins.start(k));
      os << csv::quote(s.scheme) << ',' << bins.start(k) << ','
         << format_double(marginal_price(s.schedule, q)) << ',';
      if (!s.ci.empty()) os << format_double(s.ci[k].first) << ',' << format_double(s.ci[k].second);
      else os << ',';
      os << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// flat config

/// key = value lines; '#' starts a comment; later keys override earlier ones.
inline std::map<std::string, std::string> parse_kv_config(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = csv::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
    const std::string key = csv::trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(n) + ": empty key");
    out[key] = csv::trim(t.substr(eq + 1));
  }
  return out;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = csv::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& t : split_list(s)) {
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v))
      throw ConfigError("not a number list: '" + s + "'");
    out.push_back(v);
  }
  return out;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  os << j.dump(2) << '\n';
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return Json::parse(in);
}

}  // namespace tariffkit
