#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "tariffkit/choice.hpp"
#include "tariffkit/distributions.hpp"
#include "tariffkit/errors.hpp"
#include "tariffkit/market_model.hpp"
#include "tariffkit/parallel.hpp"
#include "tariffkit/tariff.hpp"

namespace tariffkit {

enum class ProfitMethod { automatic, envelope, monte_carlo };

inline std::string_view to_string(ProfitMethod m) {
  switch (m) {
    case ProfitMethod::automatic: return "automatic";
    case ProfitMethod::envelope: return "envelope";
    case ProfitMethod::monte_carlo: return "monte_carlo";
  }
  return "?";
}

struct ProfitOptions {
  ProfitMethod method = ProfitMethod::automatic;  // envelope when alpha == 1
  int draws = 100000;                              // Monte Carlo draws per customer
  std::uint64_t seed = 1;
  bool parallel = true;
  int q_max = kDefaultMaxQuantity;
};

struct SegmentProfit {
  int bin_start = 0;
  double profit = 0.0;
  double revenue = 0.0;
  double cost = 0.0;
  double expected_buyers = 0.0;
  double consumer_surplus = 0.0;
};

struct ProfitReport {
  double expected_profit = 0.0;
  double expected_revenue = 0.0;
  double expected_cost = 0.0;
  double consumer_surplus = 0.0;
  double expected_buyers = 0.0;
  std::vector<SegmentProfit> per_segment;  // one per pricing bin, by deal size
  ProfitMethod method = ProfitMethod::envelope;
  std::optional<double> mc_std_error;

  double social_welfare() const { return expected_profit + consumer_surplus; }
};

namespace detail {

struct CustomerContribution {
  double revenue = 0.0;
  double cost = 0.0;
  double buyers = 0.0;
  double surplus = 0.0;
  double profit_var = 0.0;  // MC only: variance of one draw's profit
};

inline double std_cdf(ErrorFamily f, double z) {
  if (z == std::numeric_limits<double>::infinity()) return 1.0;
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  return dist::cdf(f, z);
}

inline double std_partial_mean(ErrorFamily f, double z) {
  if (std::isinf(z)) return 0.0;
  return dist::partial_mean_below(f, z);
}

inline CustomerContribution envelope_contribution(const ValueEnvelope& env, double mu,
                                                  double sigma, ErrorFamily fam,
                                                  const CostParams& costs) {
  CustomerContribution out;
  const std::size_t n = env.winning_quantity.size();
  auto add = [&](std::size_t j, double mass, double mean_v) {
    const int q = env.winning_quantity[j];
    if (q == 0 || mass <= 0.0) return;
    const double pay = env.payments[j];
    out.revenue += mass * pay;
    out.cost += mass * (costs.c1 + costs.c2 * q);
    out.buyers += mass;
    out.surplus += env.units[j] * mean_v - mass * pay;
  };
  if (!(sigma > 0.0)) {
    const std::size_t j = env.interval_of(mu);
    add(j, 1.0, mu);
    return out;
  }
  const double inf = std::numeric_limits<double>::infinity();
  double z_lo = -inf;
  double f_lo = 0.0;
  double pm_lo = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double z_hi = j < env.breakpoints.size() ? (env.breakpoints[j] - mu) / sigma : inf;
    const double f_hi = std_cdf(fam, z_hi);
    const double pm_hi = std_partial_mean(fam, z_hi);
    const double mass = f_hi - f_lo;
    // E[v 1{interval}] = mu * mass + sigma * E[eps 1{interval}]
    add(j, mass, mu * mass + sigma * (pm_hi - pm_lo));
    z_lo = z_hi;
    f_lo = f_hi;
    pm_lo = pm_hi;
  }
  (void)z_lo;
  return out;
}

inline std::vector<SegmentProfit> empty_segments(const Bins& bins) {
  std::vector<SegmentProfit> seg(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) seg[k].bin_start = bins.start(k);
  return seg;
}

inline void finish_report(const Market& market, const std::vector<CustomerContribution>& parts,
                          ProfitReport& rep) {
  const Bins& bins = market.bins().pricing_bins;
  rep.per_segment = empty_segments(bins);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& c = parts[i];
    rep.expected_revenue += c.revenue;
    rep.expected_cost += c.cost;
    rep.consumer_surplus += c.surplus;
    rep.expected_buyers += c.buyers;
    const auto k = bins.find(market.customer_size(i));
    if (!k) continue;
    SegmentProfit& s = rep.per_segment[*k];
    s.revenue += c.revenue;
    s.cost += c.cost;
    s.profit += c.revenue - c.cost;
    s.expected_buyers += c.buyers;
    s.consumer_surplus += c.surplus;
  }
  rep.expected_profit = rep.expected_revenue - rep.expected_cost;
}

}  // namespace detail

/// Expected profit by integrating each customer's value distribution over the
/// intervals of the value envelope. Exact for piecewise-linear values.
inline ProfitReport expected_profit_envelope(const Market& market, const PriceSchedule& p,
                                             const ProfitOptions& opt = {}) {
  if (p.kind == ScheduleKind::individualized)
    throw UnsupportedError("individualized schedules are evaluated by the counterfactual lab");
  validate_schedule(p);
  std::map<int, ValueEnvelope> envelopes;
  for (std::size_t i = 0; i < market.size(); ++i) {
    const int q = market.customer_size(i);
    if (!envelopes.count(q)) envelopes.emplace(q, value_envelope(q, p, market.smoothness(), opt.q_max));
  }
  std::vector<detail::CustomerContribution> parts(market.size());
  auto body = [&](std::size_t i) {
    parts[i] = detail::envelope_contribution(envelopes.at(market.customer_size(i)),
                                             market.mean(i), market.sigma(), market.family(),
                                             market.costs());
  };
  if (opt.parallel) {
    parallel_for(market.size(), body);
  } else {
    for (std::size_t i = 0; i < market.size(); ++i) body(i);
  }
  ProfitReport rep;
  rep.method = ProfitMethod::envelope;
  detail::finish_report(market, parts, rep);
  return rep;
}

/// Monte Carlo estimate from R value draws per customer. Draws depend only on
/// (seed, customer index, draw index), so different schedules evaluated with
/// the same seed share their random numbers.
inline ProfitReport expected_profit_monte_carlo(const Market& market, const PriceSchedule& p,
                                                const ProfitOptions& opt = {}) {
  if (p.kind == ScheduleKind::individualized)
    throw UnsupportedError("individualized schedules are evaluated by the counterfactual lab");
  validate_schedule(p);
  if (opt.draws < 2) throw DomainError("Monte Carlo needs at least two draws");
  const double alpha = market.smoothness();
  const CostParams costs = market.costs();

  struct Table {
    std::vector<int> q;
    std::vector<double> pay;
  };
  std::map<int, Table> tables;
  if (alpha == 1.0) {
    for (std::size_t i = 0; i < market.size(); ++i) {
      const int size = market.customer_size(i);
      if (tables.count(size)) continue;
      Table t;
      t.q = candidate_quantities(size, p, opt.q_max);
      for (int q : t.q) t.pay.push_back(total_price(p, q));
      tables.emplace(size, std::move(t));
    }
  }

  const auto seed_lo = static_cast<std::uint32_t>(opt.seed & 0xffffffffu);
  const auto seed_hi = static_cast<std::uint32_t>(opt.seed >> 32);
  std::vector<detail::CustomerContribution> parts(market.size());
  auto body = [&](std::size_t i) {
    std::seed_seq seq{seed_lo, seed_hi, static_cast<std::uint32_t>(i),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) >> 32)};
    std::mt19937_64 rng(seq);
    const int size = market.customer_size(i);
    const double mu = market.mean(i);
    const double sigma = market.sigma();
    const Table* table = alpha == 1.0 ? &tables.at(size) : nullptr;
    long double rev = 0, cost = 0, buy = 0, cs = 0, prof = 0, prof2 = 0;
    for (int r = 0; r < opt.draws; ++r) {
      const double v = mu + sigma * dist::draw(market.family(), rng);
      int q = 0;
      double pay = 0.0;
      double surplus = 0.0;
      if (table) {
        for (std::size_t j = 0; j < table->q.size(); ++j) {
          const double s = v * std::min(table->q[j], size) - table->pay[j];
          if (table->q[j] == 0 || s >= surplus) {
            surplus = s;
            q = table->q[j];
            pay = table->pay[j];
          }
        }
      } else {
        const PurchaseDecision d = solve_purchase(v, size, p, alpha, opt.q_max);
        q = d.quantity;
        pay = d.payment;
        surplus = d.surplus;
      }
      const double c = q > 0 ? costs.c1 + costs.c2 * q : 0.0;
      rev += pay;
      cost += c;
      buy += q > 0 ? 1 : 0;
      cs += surplus;
      prof += pay - c;
      prof2 += static_cast<long double>(pay - c) * (pay - c);
    }
    const long double n = opt.draws;
    auto& out = parts[i];
    out.revenue = static_cast<double>(rev / n);
    out.cost = static_cast<double>(cost / n);
    out.buyers = static_cast<double>(buy / n);
    out.surplus = static_cast<double>(cs / n);
    const long double mean = prof / n;
    out.profit_var = static_cast<double>(std::max<long double>(0, (prof2 - n * mean * mean) / (n - 1)));
  };
  if (opt.parallel) {
    parallel_for(market.size(), body);
  } else {
    for (std::size_t i = 0; i < market.size(); ++i) body(i);
  }
  ProfitReport rep;
  rep.method = ProfitMethod::monte_carlo;
  detail::finish_report(market, parts, rep);
  double var = 0.0;
  for (const auto& c : parts) var += c.profit_var;  // customers draw independently
  rep.mc_std_error = std::sqrt(var / opt.draws);
  return rep;
}

inline ProfitReport expected_profit(const Market& market, const PriceSchedule& p,
                                    const ProfitOptions& opt = {}) {
  ProfitMethod m = opt.method;
  if (m == ProfitMethod::automatic)
    m = market.smoothness() == 1.0 ? ProfitMethod::envelope : ProfitMethod::monte_carlo;
  if (m == ProfitMethod::envelope) return expected_profit_envelope(market, p, opt);
  return expected_profit_monte_carlo(market, p, opt);
}

struct Welfare {
  double profit = 0.0;
  double consumer_surplus = 0.0;
  double social_welfare = 0.0;
};

inline Welfare welfare(const Market& market, const PriceSchedule& p, const ProfitOptions& opt = {}) {
  const ProfitReport r = expected_profit(market, p, opt);
  return {r.expected_profit, r.consumer_surplus, r.social_welfare()};
}

// ---------------------------------------------------------------------------
// Search

using Objective = std::function<double(const std::vector<double>&)>;

struct GridBisectionConfig {
  int dims = 1;
  int points_per_dim = 5;
  double zoom = 0.5;
  std::vector<double> lower;  // empty: 0 in every dimension
  std::vector<double> upper;  // empty: 5000 in every dimension
  double stop_width = 1.0;
  int max_iterations = 1000;
  bool parallel = true;
  // Evaluated once before the first grid; they only seed the incumbent.
  std::vector<std::vector<double>> seed_points;
};

inline std::vector<double> resolved_lower(const GridBisectionConfig& c) {
  return c.lower.empty() ? std::vector<double>(static_cast<std::size_t>(c.dims), 0.0) : c.lower;
}
inline std::vector<double> resolved_upper(const GridBisectionConfig& c) {
  return c.upper.empty() ? std::vector<double>(static_cast<std::size_t>(c.dims), 5000.0) : c.upper;
}

inline void validate(const GridBisectionConfig& c) {
  if (c.dims < 1) throw ConfigError("grid bisection needs at least one dimension");
  if (c.points_per_dim < 2) throw ConfigError("points_per_dim must be >= 2");
  if (!(c.zoom > 0.0 && c.zoom < 1.0)) throw ConfigError("zoom must lie in (0, 1)");
  if (!(c.stop_width > 0.0)) throw ConfigError("stop_width must be positive");
  if (c.max_iterations < 1) throw ConfigError("max_iterations must be positive");
  const auto lo = resolved_lower(c);
  const auto hi = resolved_upper(c);
  if (lo.size() != static_cast<std::size_t>(c.dims) || hi.size() != lo.size())
    throw ConfigError("bounds must have one entry per dimension");
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (!(hi[k] > lo[k])) throw ConfigError("upper bound must exceed lower bound");
  for (const auto& s : c.seed_points)
    if (s.size() != lo.size()) throw ConfigError("seed point has the wrong dimension");
  double total = 1.0;
  for (int k = 0; k < c.dims; ++k) total *= c.points_per_dim;
  if (total > 5e7) throw ConfigError("grid too large");
}

struct GridTraceRow {
  int iteration = 0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> grid_argmax;
  double grid_value = 0.0;
  std::vector<double> incumbent;
  double incumbent_value = 0.0;
};

struct SearchResult {
  std::vector<double> argmax;
  double value = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  long evaluations = 0;
  std::vector<GridTraceRow> trace;
};

/// Iterations the zoom schedule needs before every width is at most eps.
inline int grid_bisection_iterations(double width, double zoom, double eps) {
  if (width <= eps) return 1;
  return static_cast<int>(std::ceil((std::log(width) - std::log(eps)) / (-std::log(zoom)) - 1e-12));
}

inline SearchResult grid_bisection(const Objective& f, const GridBisectionConfig& cfg) {
  validate(cfg);
  const std::size_t K = static_cast<std::size_t>(cfg.dims);
  const std::size_t d = static_cast<std::size_t>(cfg.points_per_dim);
  std::vector<double> lo = resolved_lower(cfg);
  std::vector<double> hi = resolved_upper(cfg);
  auto safe = [&](const std::vector<double>& x) {
    const double v = f(x);
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  };

  SearchResult res;
  for (const auto& s : cfg.seed_points) {
    const double v = safe(s);
    ++res.evaluations;
    if (res.argmax.empty() || v > res.value) {
      res.value = v;
      res.argmax = s;
    }
  }

  std::size_t total = 1;
  for (std::size_t k = 0; k < K; ++k) total *= d;
  std::vector<double> values(total);
  std::vector<std::vector<double>> points(total, std::vector<double>(K));

  for (int t = 1;; ++t) {
    for (std::size_t idx = 0; idx < total; ++idx) {
      // first dimension is the most significant digit: idx order is lexicographic
      std::size_t rem = idx;
      for (std::size_t k = K; k-- > 0;) {
        const std::size_t j = rem % d;
        rem /= d;
        points[idx][k] = j + 1 == d ? hi[k]
                                    : lo[k] + (hi[k] - lo[k]) * static_cast<double>(j) / (d - 1);
      }
    }
    auto eval = [&](std::size_t idx) { values[idx] = safe(points[idx]); };
    if (cfg.parallel) {
      parallel_for(total, eval);
    } else {
      for (std::size_t idx = 0; idx < total; ++idx) eval(idx);
    }
    res.evaluations += static_cast<long>(total);
    std::size_t best = 0;
    for (std::size_t idx = 1; idx < total; ++idx)
      if (values[idx] > values[best]) best = idx;
    if (res.argmax.empty() || values[best] > res.value) {
      res.value = values[best];
      res.argmax = points[best];
    }
    res.iterations = t;
    res.trace.push_back({t, lo, hi, points[best], values[best], res.argmax, res.value});

    bool done = true;
    std::vector<double> width(K);
    for (std::size_t k = 0; k < K; ++k) {
      width[k] = cfg.zoom * (hi[k] - lo[k]);
      if (width[k] > cfg.stop_width) done = false;
    }
    if (done || t >= cfg.max_iterations) break;
    for (std::size_t k = 0; k < K; ++k) {
      const double c = points[best][k];
      const double new_lo = std::clamp(c - width[k] / 2.0, lo[k], hi[k] - width[k]);
      lo[k] = new_lo;
      hi[k] = new_lo + width[k];
    }
  }
  return res;
}

inline void write_trace_csv(std::ostream& os, const SearchResult& r) {
  if (r.trace.empty()) return;
  const std::size_t K = r.trace.front().lower.size();
  os << "iteration";
  for (std::size_t k = 0; k < K; ++k) os << ",lower_" << k << ",upper_" << k;
  for (std::size_t k = 0; k < K; ++k) os << ",incumbent_" << k;
  os << ",value\n";
  const auto old = os.precision(17);
  for (const auto& row : r.trace) {
    os << row.iteration;
    for (std::size_t k = 0; k < K; ++k) os << ',' << row.lower[k] << ',' << row.upper[k];
    for (std::size_t k = 0; k < K; ++k) os << ',' << row.incumbent[k];
    os << ',' << row.incumbent_value << '\n';
  }
  os.precision(old);
}

struct NelderMeadConfig {
  std::vector<double> lower;
  std::vector<double> upper;
  int initial_grid_points = 5;  // per dimension, for the starting point
  double tolerance = 1.0;       // simplex diameter (max-norm)
  int max_iterations = 5000;
  double initial_step = 0.1;    // fraction of the box width
};

/// Best point of a coarse inclusive grid; the usual Nelder-Mead start.
inline std::vector<double> coarse_grid_start(const Objective& f, const std::vector<double>& lower,
                                             const std::vector<double>& upper, int points) {
  GridBisectionConfig g;
  g.dims = static_cast<int>(lower.size());
  g.lower = lower;
  g.upper = upper;
  g.points_per_dim = points;
  g.max_iterations = 1;
  return grid_bisection(f, g).argmax;
}

/// Maximizes f by simplex search, with vertices clamped to the box.
inline SearchResult nelder_mead(const Objective& f, std::vector<double> start,
                                const NelderMeadConfig& cfg) {
  const std::size_t K = start.size();
  if (K == 0) throw ConfigError("nelder_mead needs a nonempty start");
  if (cfg.lower.size() != K || cfg.upper.size() != K)
    throw ConfigError("bounds must have one entry per dimension");
  if (!(cfg.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  auto clamp = [&](std::vector<double> x) {
    for (std::size_t k = 0; k < K; ++k) x[k] = std::clamp(x[k], cfg.lower[k], cfg.upper[k]);
    return x;
  };
  SearchResult res;
  // minimize g = -f
  auto g = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : -v;
  };
  std::vector<std::vector<double>> simplex{clamp(start)};
  for (std::size_t k = 0; k < K; ++k) {
    auto x = simplex[0];
    const double step = cfg.initial_step * (cfg.upper[k] - cfg.lower[k]);
    x[k] = x[k] + step <= cfg.upper[k] ? x[k] + step : x[k] - step;
    simplex.push_back(clamp(x));
  }
  std::vector<double> val;
  for (const auto& x : simplex) val.push_back(g(x));

  auto combine = [&](const std::vector<double>& a, const std::vector<double>& b, double t) {
    std::vector<double> x(K);
    for (std::size_t k = 0; k < K; ++k) x[k] = a[k] + t * (b[k] - a[k]);
    return clamp(x);
  };
  std::vector<std::size_t> order(K + 1);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    for (std::size_t i = 0; i <= K; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    const auto& best = simplex[order[0]];
    double diam = 0.0;
    for (std::size_t i = 1; i <= K; ++i)
      for (std::size_t k = 0; k < K; ++k)
        diam = std::max(diam, std::abs(simplex[order[i]][k] - best[k]));
    res.iterations = it;
    if (diam < cfg.tolerance) break;

    std::vector<double> centroid(K, 0.0);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t k = 0; k < K; ++k) centroid[k] += simplex[order[i]][k] / K;
    const std::size_t worst = order[K];
    const std::size_t second = order[K - 1];

    const auto xr = combine(centroid, simplex[worst], -1.0);
    const double fr = g(xr);
    if (fr < val[order[0]]) {
      const auto xe = combine(centroid, simplex[worst], -2.0);
      const double fe = g(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        val[worst] = fe;
      } else {
        simplex[worst] = xr;
        val[worst] = fr;
      }
      continue;
    }
    if (fr < val[second]) {
      simplex[worst] = xr;
      val[worst] = fr;
      continue;
    }
    const bool outside = fr < val[worst];
    const auto xc = outside ? combine(centroid, xr, 0.5) : combine(centroid, simplex[worst], 0.5);
    const double fc = g(xc);
    if (fc < (outside ? fr : val[worst])) {
      simplex[worst] = xc;
      val[worst] = fc;
      continue;
    }
    const auto anchor = simplex[order[0]];
    for (std::size_t i = 1; i <= K; ++i) {
      simplex[order[i]] = combine(anchor, simplex[order[i]], 0.5);
      val[order[i]] = g(simplex[order[i]]);
    }
  }
  std::size_t b = 0;
  for (std::size_t i = 1; i <= K; ++i)
    if (val[i] < val[b]) b = i;
  res.argmax = simplex[b];
  res.value = -val[b];
  return res;
}

// ---------------------------------------------------------------------------
// Schedule optimization

enum class SearchKind { linear, via_origin, continuous, two_part, via_origin_fee };

inline std::string_view to_string(SearchKind k) {
  switch (k) {
    case SearchKind::linear: return "linear";
    case SearchKind::via_origin: return "via_origin";
    case SearchKind::continuous: return "continuous";
    case SearchKind::two_part: return "two_part";
    case SearchKind::via_origin_fee: return "via_origin_fee";
  }
  return "?";
}

inline SearchKind parse_search_kind(std::string_view s) {
  if (s == "linear") return SearchKind::linear;
  if (s == "via_origin") return SearchKind::via_origin;
  if (s == "continuous") return SearchKind::continuous;
  if (s == "two_part") return SearchKind::two_part;
  if (s == "via_origin_fee") return SearchKind::via_origin_fee;
  throw ConfigError("unknown search kind: " + std::string(s));
}

struct OptimizeConfig {
  GridBisectionConfig grid;  // dims and bounds are filled from the kind
  double rate_lower = 0.0;
  double rate_upper = 5000.0;
  double fee_lower = 0.0;
  double fee_upper = 20000.0;
  ProfitOptions profit{ProfitMethod::automatic, 20000, 1, false, kDefaultMaxQuantity};
  // Schedules from nested classes (for example the optimal linear price) that
  // seed the incumbent when they embed in the searched class.
  std::vector<PriceSchedule> seeds;
};

inline int search_dims(SearchKind kind, const Bins& bins) {
  const int n = static_cast<int>(bins.size());
  switch (kind) {
    case SearchKind::linear: return 1;
    case SearchKind::two_part: return 2;
    case SearchKind::via_origin:
    case SearchKind::continuous: return n;
    case SearchKind::via_origin_fee: return n + 1;
  }
  return 0;
}

/// Vector layout: linear (rate); two_part (fee, rate); piecewise (rates...);
/// via_origin_fee (rates..., fee).
inline PriceSchedule schedule_from_vector(SearchKind kind, const Bins& bins,
                                          const std::vector<double>& x) {
  switch (kind) {
    case SearchKind::linear: return PriceSchedule::linear(x.at(0));
    case SearchKind::two_part: return PriceSchedule::two_part(x.at(0), x.at(1));
    case SearchKind::via_origin: return PriceSchedule::via_origin(bins, x);
    case SearchKind::continuous: return PriceSchedule::continuous(bins, x);
    case SearchKind::via_origin_fee:
      return PriceSchedule::via_origin(bins, std::vector<double>(x.begin(), x.end() - 1), x.back());
  }
  throw ConfigError("unknown search kind");
}

/// The searched-class vector that reproduces p exactly, if there is one.
inline std::optional<std::vector<double>> embed_schedule(const PriceSchedule& p, SearchKind kind,
                                                         const Bins& bins) {
  const std::size_t n = bins.size();
  const bool flat = p.kind == ScheduleKind::linear || p.kind == ScheduleKind::two_part;
  switch (kind) {
    case SearchKind::linear:
      if (flat && p.fixed_fee == 0.0) return std::vector<double>{p.rates[0]};
      return std::nullopt;
    case SearchKind::two_part:
      if (flat) return std::vector<double>{p.fixed_fee, p.rates[0]};
      return std::nullopt;
    case SearchKind::via_origin:
    case SearchKind::continuous:
      if (p.fixed_fee != 0.0) return std::nullopt;
      if (flat) return std::vector<double>(n, p.rates[0]);
      if (p.bins == bins && p.kind == (kind == SearchKind::via_origin ? ScheduleKind::via_origin
                                                                      : ScheduleKind::continuous))
        return p.rates;
      return std::nullopt;
    case SearchKind::via_origin_fee: {
      std::vector<double> x;
      if (flat) {
        x.assign(n, p.rates[0]);
      } else if (p.kind == ScheduleKind::via_origin && p.bins == bins) {
        x = p.rates;
      } else {
        return std::nullopt;
      }
      x.push_back(p.fixed_fee);
      return x;
    }
  }
  return std::nullopt;
}

struct OptimizeResult {
  PriceSchedule schedule;
  ProfitReport report;
  SearchResult search;
};

inline GridBisectionConfig grid_for(SearchKind kind, const Bins& bins, const OptimizeConfig& cfg) {
  GridBisectionConfig g = cfg.grid;
  g.dims = search_dims(kind, bins);
  const std::size_t K = static_cast<std::size_t>(g.dims);
  if (g.lower.size() != K || g.upper.size() != K) {
    g.lower.assign(K, cfg.rate_lower);
    g.upper.assign(K, cfg.rate_upper);
    if (kind == SearchKind::two_part) {
      g.lower[0] = cfg.fee_lower;
      g.upper[0] = cfg.fee_upper;
    } else if (kind == SearchKind::via_origin_fee) {
      g.lower[K - 1] = cfg.fee_lower;
      g.upper[K - 1] = cfg.fee_upper;
    }
  }
  for (const auto& s : cfg.seeds) {
    auto x = embed_schedule(s, kind, bins);
    if (!x) continue;
    bool inside = true;
    for (std::size_t k = 0; k < K; ++k)
      if ((*x)[k] < g.lower[k] || (*x)[k] > g.upper[k]) inside = false;
    if (inside) g.seed_points.push_back(*x);
  }
  return g;
}

/// Jointly optimal schedule of the given kind by grid bisection over
/// expected profit.
inline OptimizeResult optimize_schedule(const Market& market, SearchKind kind,
                                        const OptimizeConfig& cfg = {}) {
  const Bins& bins = market.bins().pricing_bins;
  const GridBisectionConfig g = grid_for(kind, bins, cfg);
  ProfitOptions popt = cfg.profit;
  popt.parallel = false;  // the grid is already parallel
  auto objective = [&](const std::vector<double>& x) {
    return expected_profit(market, schedule_from_vector(kind, bins, x), popt).expected_profit;
  };
  OptimizeResult out;
  out.search = grid_bisection(objective, g);
  out.schedule = schedule_from_vector(kind, bins, out.search.argmax);
  out.report = expected_profit(market, out.schedule, popt);
  return out;
}

struct IndividualResult {
  PriceSchedule schedule;            // via-origin rates p~_k
  std::vector<double> local_profit;  // pi_k(p~_k); 0 for empty bins
  std::vector<bool> empty_bin;
  double naive_profit = 0.0;         // sum of local profits
  ProfitReport true_report;          // assembled schedule with full cross-bin choice
};

/// Prices each pricing bin separately as if its customers could only buy at
/// one linear rate, then evaluates the assembled via-origin schedule.
inline IndividualResult individually_optimized(const Market& market, const OptimizeConfig& cfg = {}) {
  const Bins& bins = market.bins().pricing_bins;
  const std::size_t n = bins.size();
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < market.size(); ++i)
    if (auto k = bins.find(market.customer_size(i))) members[*k].push_back(i);

  IndividualResult out;
  out.local_profit.assign(n, 0.0);
  out.empty_bin.assign(n, false);
  std::vector<double> rates(n, 0.0);
  bool any = false;
  ProfitOptions popt = cfg.profit;
  popt.parallel = false;
  for (std::size_t k = 0; k < n; ++k) {
    if (members[k].empty()) {
      out.empty_bin[k] = true;
      continue;
    }
    any = true;
    const Market sub = market.subset(members[k]);
    OptimizeConfig local = cfg;
    local.seeds.clear();
    const GridBisectionConfig g = grid_for(SearchKind::linear, bins, local);
    auto objective = [&](const std::vector<double>& x) {
      return expected_profit(sub, PriceSchedule::linear(x[0]), popt).expected_profit;
    };
    const SearchResult r = grid_bisection(objective, g);
    rates[k] = r.argmax[0];
    out.local_profit[k] = r.value;
    out.naive_profit += r.value;
  }
  if (!any) throw DomainError("every pricing bin is empty");
  // empty bins copy the previous bin's rate (the first nonempty one at the front)
  std::size_t first = 0;
  while (out.empty_bin[first]) ++first;
  for (std::size_t k = 0; k < first; ++k) rates[k] = rates[first];
  for (std::size_t k = first + 1; k < n; ++k)
    if (out.empty_bin[k]) rates[k] = rates[k - 1];
  out.schedule = PriceSchedule::via_origin(bins, rates);
  out.true_report = expected_profit(market, out.schedule, popt);
  return out;
}

}  // namespace tariffkit
