#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "tariffkit/errors.hpp"
#include "tariffkit/market_model.hpp"

namespace tariffkit {

enum class ScheduleKind { linear, via_origin, continuous, two_part, individualized };

inline std::string_view to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::linear: return "linear";
    case ScheduleKind::via_origin: return "via_origin";
    case ScheduleKind::continuous: return "continuous";
    case ScheduleKind::two_part: return "two_part";
    case ScheduleKind::individualized: return "individualized";
  }
  return "?";
}

inline ScheduleKind parse_schedule_kind(std::string_view s) {
  if (s == "linear") return ScheduleKind::linear;
  if (s == "via_origin") return ScheduleKind::via_origin;
  if (s == "continuous") return ScheduleKind::continuous;
  if (s == "two_part") return ScheduleKind::two_part;
  if (s == "individualized") return ScheduleKind::individualized;
  throw ConfigError("unknown schedule kind: " + std::string(s));
}

inline constexpr int kDefaultMaxQuantity = 500;

/// A posted tariff P(q). Piecewise kinds carry one rate per pricing bin;
/// linear and two-part carry a single rate over the bin list {0}.
struct PriceSchedule {
  ScheduleKind kind = ScheduleKind::linear;
  Bins bins{std::vector<int>{0}};
  std::vector<double> rates{0.0};
  double fixed_fee = 0.0;

  static PriceSchedule linear(double rate) {
    return make(ScheduleKind::linear, Bins{{0}}, {rate}, 0.0);
  }
  static PriceSchedule two_part(double fee, double rate) {
    return make(ScheduleKind::two_part, Bins{{0}}, {rate}, fee);
  }
  static PriceSchedule via_origin(Bins bins, std::vector<double> rates, double fee = 0.0) {
    return make(ScheduleKind::via_origin, std::move(bins), std::move(rates), fee);
  }
  static PriceSchedule continuous(Bins bins, std::vector<double> rates, double fee = 0.0) {
    return make(ScheduleKind::continuous, std::move(bins), std::move(rates), fee);
  }
  static PriceSchedule individualized() {
    PriceSchedule p;
    p.kind = ScheduleKind::individualized;
    p.rates.clear();
    return p;
  }

  bool piecewise() const {
    return kind == ScheduleKind::via_origin || kind == ScheduleKind::continuous;
  }

  friend bool operator==(const PriceSchedule&, const PriceSchedule&) = default;

 private:
  static PriceSchedule make(ScheduleKind kind, Bins bins, std::vector<double> rates,
                            double fee) {
    PriceSchedule p;
    p.kind = kind;
    p.bins = std::move(bins);
    p.rates = std::move(rates);
    p.fixed_fee = fee;
    validate_schedule(p);
    return p;
  }

  friend void validate_schedule(const PriceSchedule& p) {
    if (p.kind == ScheduleKind::individualized) return;
    if (p.rates.size() != p.bins.size())
      throw ConfigError("schedule needs one rate per bin");
    if (p.bins.empty() || p.bins.start(0) != 0)
      throw ConfigError("schedule bins must start at 0");
    for (double r : p.rates)
      if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("rates must be nonnegative");
    if (!(p.fixed_fee >= 0.0) || !std::isfinite(p.fixed_fee))
      throw DomainError("fixed fee must be nonnegative");
    if ((p.kind == ScheduleKind::linear || p.kind == ScheduleKind::two_part) &&
        p.rates.size() != 1)
      throw ConfigError("linear and two-part schedules carry a single rate");
  }
};

inline double total_price(const PriceSchedule& p, double q) {
  if (q < 0.0) throw DomainError("quantity must be nonnegative");
  if (p.kind == ScheduleKind::individualized)
    throw UnsupportedError("individualized schedules are priced per customer");
  if (q == 0.0) return 0.0;
  switch (p.kind) {
    case ScheduleKind::linear:
    case ScheduleKind::two_part:
      return p.fixed_fee + p.rates[0] * q;
    case ScheduleKind::via_origin:
      return p.fixed_fee + p.rates[p.bins.index_of(q)] * q;
    case ScheduleKind::continuous: {
      const std::size_t k = p.bins.index_of(q);
      double acc = p.fixed_fee;
      for (std::size_t j = 0; j < k; ++j)
        acc += p.rates[j] * static_cast<double>(p.bins.end(j) - p.bins.start(j));
      return acc + p.rates[k] * (q - p.bins.start(k));
    }
    case ScheduleKind::individualized: break;
  }
  return 0.0;
}

/// Applicable per-unit rate at q (flat rate for via-origin, incremental for continuous).
inline double marginal_price(const PriceSchedule& p, double q) {
  if (!(q > 0.0)) throw DomainError("marginal price needs q > 0");
  if (p.kind == ScheduleKind::individualized)
    throw UnsupportedError("individualized schedules have no posted marginal price");
  return p.rates[p.bins.index_of(q)];
}

/// Total price per unit at q; equals the flat rate for a fee-free via-origin schedule.
inline double average_price(const PriceSchedule& p, double q) {
  if (!(q > 0.0)) throw DomainError("average price needs q > 0");
  return total_price(p, q) / q;
}

struct ConcavityReport {
  bool concave_increasing = true;
  std::vector<int> dip_quantities;  // q with some q' < q priced strictly above q
};

/// Scans total_price on the integer grid 1..q_max.
inline ConcavityReport is_concave_increasing(const PriceSchedule& p,
                                             int q_max = kDefaultMaxQuantity) {
  ConcavityReport out;
  double running_max = 0.0;
  double prev = total_price(p, 1.0);
  double prev_inc = std::numeric_limits<double>::infinity();
  running_max = prev;
  for (int q = 2; q <= q_max; ++q) {
    const double cur = total_price(p, q);
    const double inc = cur - prev;
    const double tol = 1e-9 * (1.0 + std::abs(cur));
    if (!(inc > 0.0)) out.concave_increasing = false;
    if (inc > prev_inc + tol) out.concave_increasing = false;
    if (running_max > cur + tol) out.dip_quantities.push_back(q);
    running_max = std::max(running_max, cur);
    prev = cur;
    prev_inc = inc;
  }
  if (!out.dip_quantities.empty()) out.concave_increasing = false;
  return out;
}

}  // namespace tariffkit
