#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tariffkit/errors.hpp"
#include "tariffkit/market_model.hpp"
#include "tariffkit/tariff.hpp"

namespace tariffkit {

struct PurchaseDecision {
  int quantity = 0;
  double payment = 0.0;
  double surplus = 0.0;
  bool bought = false;

  friend bool operator==(const PurchaseDecision&, const PurchaseDecision&) = default;
};

/// Integer quantities that always contain the buyer's argmax when the value
/// function is piecewise linear: no purchase, the full size, both ends of each
/// bin below the size, and every bin start above it (up to q_max).
inline std::vector<int> candidate_quantities(int size, const PriceSchedule& p,
                                             int q_max = kDefaultMaxQuantity) {
  if (size < 1) throw DomainError("size must be >= 1");
  std::vector<int> out{0, size};
  for (std::size_t k = 0; k < p.bins.size(); ++k) {
    const int lo = p.bins.start(k);
    if (lo > 0 && (lo <= size || lo <= q_max)) out.push_back(lo);
    if (!p.bins.unbounded(k)) {
      const int last = p.bins.end(k) - 1;
      if (last >= 1 && last <= size) out.push_back(last);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace detail {

// Adds the two integers around the interior stationary point of
// v * size^(1-a) * q^a - rate * q in each bin below the size.
inline void add_smooth_candidates(std::vector<int>& out, double v, int size,
                                  const PriceSchedule& p, double alpha) {
  if (alpha >= 1.0 || v <= 0.0) return;
  const double zeta = std::pow(static_cast<double>(size), 1.0 - alpha);
  for (std::size_t k = 0; k < p.bins.size(); ++k) {
    const int lo = std::max(1, p.bins.start(k));
    const int hi = p.bins.unbounded(k) ? size : std::min(size, p.bins.end(k) - 1);
    if (lo > hi) continue;
    const double rate = p.rates[k];
    double stationary = static_cast<double>(hi);
    if (rate > 0.0) {
      stationary = std::pow(alpha * v * zeta / rate, 1.0 / (1.0 - alpha));
      if (!std::isfinite(stationary)) stationary = hi;
    }
    const double clamped = std::clamp(stationary, static_cast<double>(lo), static_cast<double>(hi));
    out.push_back(static_cast<int>(std::floor(clamped)));
    out.push_back(static_cast<int>(std::ceil(clamped)));
  }
}

inline PurchaseDecision evaluate(double alpha, double v, int size, const PriceSchedule& p, int q) {
  PurchaseDecision d;
  d.quantity = q;
  d.bought = q > 0;
  d.payment = total_price(p, q);
  d.surplus = gross_value(alpha, v, size, q) - d.payment;
  return d;
}

}  // namespace detail

/// Buyer's best response q* = argmax V(q) - P(q) over the candidate set.
/// Ties go to the larger quantity.
inline PurchaseDecision solve_purchase(double v, int size, const PriceSchedule& p,
                                       double alpha = 1.0, int q_max = kDefaultMaxQuantity) {
  std::vector<int> cands = candidate_quantities(size, p, q_max);
  if (alpha < 1.0) {
    detail::add_smooth_candidates(cands, v, size, p, alpha);
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  }
  PurchaseDecision best;
  for (int q : cands) {
    const PurchaseDecision d = detail::evaluate(alpha, v, size, p, q);
    if (q == 0 || d.surplus >= best.surplus) best = d;
  }
  return best;
}

/// Exhaustive scan over 0..max(q_max, size). Test oracle.
inline PurchaseDecision brute_force_purchase(double v, int size, const PriceSchedule& p,
                                             double alpha = 1.0,
                                             int q_max = kDefaultMaxQuantity) {
  if (size < 1) throw DomainError("size must be >= 1");
  PurchaseDecision best;
  const int top = std::max(q_max, size);
  for (int q = 0; q <= top; ++q) {
    const PurchaseDecision d = detail::evaluate(alpha, v, size, p, q);
    if (q == 0 || d.surplus >= best.surplus) best = d;
  }
  return best;
}

/// Partition of the value axis by winning quantity. Interval j is
/// [breakpoints[j-1], breakpoints[j]) with -inf/+inf at the ends.
struct ValueEnvelope {
  std::vector<double> breakpoints;
  std::vector<int> winning_quantity;
  std::vector<double> payments;  // P(q) of each interval's winner
  std::vector<double> units;     // min(q, size): slope of the payoff line

  std::size_t interval_of(double v) const {
    return static_cast<std::size_t>(
        std::upper_bound(breakpoints.begin(), breakpoints.end(), v) - breakpoints.begin());
  }
  int quantity_at(double v) const { return winning_quantity[interval_of(v)]; }
};

/// Upper envelope of the payoff lines U_q(v) = v * min(q, size) - P(q).
inline ValueEnvelope value_envelope(int size, const PriceSchedule& p, double alpha = 1.0,
                                    int q_max = kDefaultMaxQuantity) {
  if (alpha != 1.0)
    throw UnsupportedError("value envelope is exact only for piecewise-linear values");
  struct Line {
    double slope;
    double intercept;
    int q;
  };
  std::vector<Line> lines;
  for (int q : candidate_quantities(size, p, q_max)) {
    const double slope = std::min(q, size);
    const double pay = total_price(p, q);
    // Same slope: keep the cheaper one, larger q on ties.
    if (!lines.empty() && lines.back().slope == slope) {
      if (-pay >= lines.back().intercept) lines.back() = {slope, -pay, q};
      continue;
    }
    lines.push_back({slope, -pay, q});
  }
  // Candidates are ascending in q, hence in slope (slopes saturate at size,
  // collapsed above).
  std::vector<Line> hull;
  std::vector<double> cuts;
  auto cross = [](const Line& a, const Line& b) {
    return (a.intercept - b.intercept) / (b.slope - a.slope);
  };
  for (const Line& l : lines) {
    while (!hull.empty()) {
      const double x = cross(hull.back(), l);
      if (!cuts.empty() && x <= cuts.back()) {
        hull.pop_back();
        cuts.pop_back();
        continue;
      }
      cuts.push_back(x);
      break;
    }
    hull.push_back(l);
  }
  ValueEnvelope env;
  env.breakpoints = std::move(cuts);
  for (const Line& l : hull) {
    env.winning_quantity.push_back(l.q);
    env.payments.push_back(-l.intercept);
    env.units.push_back(l.slope);
  }
  return env;
}

}  // namespace tariffkit
