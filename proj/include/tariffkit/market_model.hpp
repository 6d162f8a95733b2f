#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tariffkit/distributions.hpp"
#include "tariffkit/errors.hpp"

namespace tariffkit {

inline constexpr const char* kInterceptName = "intercept";

/// Ascending list of half-open integer intervals [s_0, s_1), ..., [s_{K-1}, inf).
class Bins {
 public:
  Bins() = default;
  explicit Bins(std::vector<int> starts) : starts_(std::move(starts)) {
    if (starts_.empty()) throw ConfigError("bin list must not be empty");
    for (std::size_t k = 1; k < starts_.size(); ++k) {
      if (starts_[k] <= starts_[k - 1])
        throw ConfigError("bin starts must be strictly ascending");
    }
  }

  std::size_t size() const { return starts_.size(); }
  bool empty() const { return starts_.empty(); }
  const std::vector<int>& starts() const { return starts_; }
  int start(std::size_t k) const { return starts_.at(k); }
  // Exclusive upper end; max int for the unbounded last bin.
  int end(std::size_t k) const {
    return k + 1 < starts_.size() ? starts_[k + 1] : std::numeric_limits<int>::max();
  }
  bool unbounded(std::size_t k) const { return k + 1 == starts_.size(); }

  std::optional<std::size_t> find(double q) const {
    if (starts_.empty() || q < starts_.front()) return std::nullopt;
    auto it = std::upper_bound(starts_.begin(), starts_.end(), q,
                               [](double x, int s) { return x < static_cast<double>(s); });
    return static_cast<std::size_t>(std::distance(starts_.begin(), it) - 1);
  }

  std::size_t index_of(double q) const {
    auto k = find(q);
    if (!k) throw DomainError("quantity " + std::to_string(q) + " lies below the first bin");
    return *k;
  }

  bool contains(std::size_t k, double q) const {
    return q >= start(k) && (unbounded(k) || q < end(k));
  }

  friend bool operator==(const Bins&, const Bins&) = default;

 private:
  std::vector<int> starts_;
};

struct SizeBinConfig {
  Bins estimation_bins{std::vector<int>{1, 20, 50}};
  Bins pricing_bins{std::vector<int>{0, 10, 20, 50, 100}};

  friend bool operator==(const SizeBinConfig&, const SizeBinConfig&) = default;
};

struct CustomerRecord {
  std::string id;
  int year = 0;
  std::map<std::string, double> covariates;
  int size = 1;
  bool success = false;
  double observed_unit_price = 0.0;
  double snc_value = 0.0;

  friend bool operator==(const CustomerRecord&, const CustomerRecord&) = default;
};

inline void validate(const CustomerRecord& c) {
  if (c.size < 1) throw DomainError("record " + c.id + ": size must be >= 1");
  if (!(c.observed_unit_price >= 0.0))
    throw DomainError("record " + c.id + ": unit price must be >= 0");
  if (!(c.snc_value >= 0.0)) throw DomainError("record " + c.id + ": snc must be >= 0");
}

struct ValueModel {
  std::map<std::string, double> beta;  // "intercept" is the implicit constant covariate
  std::map<int, double> year_effects;  // base year carries 0
  Bins estimation_bins{std::vector<int>{1, 20, 50}};
  std::vector<double> size_effects{0.0, 0.0, 0.0};  // first bin normalized to 0
  double sigma = 1.0;
  ErrorFamily error_family = ErrorFamily::logistic;
  double smoothness = 1.0;

  friend bool operator==(const ValueModel&, const ValueModel&) = default;
};

inline void validate(const ValueModel& m, bool allow_zero_sigma = false) {
  if (allow_zero_sigma ? !(m.sigma >= 0.0) : !(m.sigma > 0.0))
    throw DomainError("value model sigma must be positive");
  if (!(m.smoothness > 0.0 && m.smoothness <= 1.0))
    throw DomainError("smoothness must lie in (0, 1]");
  if (m.size_effects.size() != m.estimation_bins.size())
    throw ConfigError("size_effects must have one entry per estimation bin");
}

struct CostParams {
  double c1 = 0.0;  // per buying customer
  double c2 = 0.0;  // per unit

  friend bool operator==(const CostParams&, const CostParams&) = default;
};

inline void validate(const CostParams& c) {
  if (!(c.c1 >= 0.0) || !(c.c2 >= 0.0)) throw DomainError("costs must be nonnegative");
}

/// beta . X only (intercept included, no year or size effects).
inline double covariate_index(const ValueModel& m, const CustomerRecord& c) {
  double acc = 0.0;
  for (const auto& [name, coef] : m.beta) {
    if (name == kInterceptName) {
      acc += coef;
      continue;
    }
    auto it = c.covariates.find(name);
    if (it == c.covariates.end())
      throw ConfigError("record " + c.id + " is missing covariate '" + name + "'");
    acc += coef * it->second;
  }
  return acc;
}

inline double year_effect(const ValueModel& m, int year) {
  auto it = m.year_effects.find(year);
  if (it == m.year_effects.end())
    throw ConfigError("no year effect for year " + std::to_string(year));
  return it->second;
}

inline double size_effect(const ValueModel& m, int size) {
  auto k = m.estimation_bins.find(size);
  if (!k) throw ConfigError("size " + std::to_string(size) + " maps to no estimation bin");
  return m.size_effects.at(*k);
}

/// mu = beta . X + alpha_year + gamma_bin(size). `year` overrides the record's own.
inline double mean_value(const ValueModel& m, const CustomerRecord& c,
                         std::optional<int> year = std::nullopt) {
  return covariate_index(m, c) + year_effect(m, year.value_or(c.year)) + size_effect(m, c.size);
}

/// Willingness to pay for q units: v * size^(1-a) * min(q, size)^a.
inline double gross_value(double smoothness, double v, int size, double q) {
  if (q < 0.0) throw DomainError("quantity must be nonnegative");
  const double used = std::min(q, static_cast<double>(size));
  if (smoothness == 1.0) return v * used;
  if (used == 0.0) return 0.0;
  return v * std::pow(static_cast<double>(size), 1.0 - smoothness) * std::pow(used, smoothness);
}

inline double gross_value(const ValueModel& m, double v, int size, double q) {
  return gross_value(m.smoothness, v, size, q);
}

/// Potential customers plus the demand and cost primitives describing them.
/// Mean values are resolved once at construction; the market is immutable.
class Market {
 public:
  Market() = default;
  Market(std::vector<CustomerRecord> customers, ValueModel model, CostParams costs,
         SizeBinConfig bins = {}, std::optional<int> analysis_year = std::nullopt)
      : customers_(std::move(customers)),
        model_(std::move(model)),
        costs_(costs),
        bins_(std::move(bins)),
        analysis_year_(analysis_year) {
    validate(model_, true);
    validate(costs_);
    means_.reserve(customers_.size());
    for (const auto& c : customers_) {
      validate(c);
      means_.push_back(mean_value(model_, c, analysis_year_));
    }
  }

  const std::vector<CustomerRecord>& customers() const { return customers_; }
  const ValueModel& value_model() const { return model_; }
  const CostParams& costs() const { return costs_; }
  const SizeBinConfig& bins() const { return bins_; }
  std::optional<int> analysis_year() const { return analysis_year_; }
  std::size_t size() const { return customers_.size(); }
  double mean(std::size_t i) const { return means_[i]; }
  const std::vector<double>& means() const { return means_; }
  int customer_size(std::size_t i) const { return customers_[i].size; }
  double sigma() const { return model_.sigma; }
  ErrorFamily family() const { return model_.error_family; }
  double smoothness() const { return model_.smoothness; }

  Market with_costs(CostParams costs) const {
    Market m = *this;
    validate(costs);
    m.costs_ = costs;
    return m;
  }

  // Replaces the per-customer mean values, leaving sizes untouched.
  Market with_means(std::vector<double> means) const {
    if (means.size() != customers_.size()) throw ConfigError("one mean per customer required");
    Market m = *this;
    m.means_ = std::move(means);
    return m;
  }

  Market with_smoothness(double alpha) const {
    Market m = *this;
    m.model_.smoothness = alpha;
    validate(m.model_, true);
    return m;
  }

  // Customers at the given indices, original order preserved.
  Market subset(const std::vector<std::size_t>& idx) const {
    Market m = *this;
    m.customers_.clear();
    m.means_.clear();
    for (auto i : idx) {
      m.customers_.push_back(customers_.at(i));
      m.means_.push_back(means_.at(i));
    }
    return m;
  }

 private:
  std::vector<CustomerRecord> customers_;
  ValueModel model_;
  CostParams costs_;
  SizeBinConfig bins_;
  std::optional<int> analysis_year_;
  std::vector<double> means_;
};

}  // namespace tariffkit
