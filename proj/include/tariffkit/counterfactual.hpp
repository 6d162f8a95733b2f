#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tariffkit/distributions.hpp"
#include "tariffkit/errors.hpp"
#include "tariffkit/market_model.hpp"
#include "tariffkit/profit.hpp"
#include "tariffkit/tariff.hpp"

namespace tariffkit {

struct ScenarioResult {
  std::string label;
  double profit = 0.0;
  double revenue = 0.0;
  double cost = 0.0;
  double consumer_welfare = 0.0;
  double social_welfare = 0.0;
  double expected_buyers = 0.0;
  std::vector<SegmentProfit> per_segment;
  std::optional<std::pair<double, double>> profit_ci;
};

inline ScenarioResult scenario_from(std::string label, const ProfitReport& r) {
  ScenarioResult s;
  s.label = std::move(label);
  s.profit = r.expected_profit;
  s.revenue = r.expected_revenue;
  s.cost = r.expected_cost;
  s.consumer_welfare = r.consumer_surplus;
  s.social_welfare = r.social_welfare();
  s.expected_buyers = r.expected_buyers;
  s.per_segment = r.per_segment;
  return s;
}

namespace detail {

inline void accumulate(ScenarioResult& into, const ScenarioResult& part) {
  into.profit += part.profit;
  into.revenue += part.revenue;
  into.cost += part.cost;
  into.consumer_welfare += part.consumer_welfare;
  into.social_welfare += part.social_welfare;
  into.expected_buyers += part.expected_buyers;
  if (into.per_segment.empty()) {
    into.per_segment = part.per_segment;
    return;
  }
  for (std::size_t k = 0; k < into.per_segment.size() && k < part.per_segment.size(); ++k) {
    auto& a = into.per_segment[k];
    const auto& b = part.per_segment[k];
    a.profit += b.profit;
    a.revenue += b.revenue;
    a.cost += b.cost;
    a.expected_buyers += b.expected_buyers;
    a.consumer_surplus += b.consumer_surplus;
  }
}

inline double rate_spread(const PriceSchedule& p) {
  if (p.rates.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(p.rates.begin(), p.rates.end());
  return *hi - *lo;
}

}  // namespace detail

/// Perfect discrimination: sell the full size whenever v*size covers the
/// cost of serving it, at exactly v*size.
inline ScenarioResult first_degree(const Market& market) {
  if (market.smoothness() != 1.0)
    throw UnsupportedError("first-degree closed form needs piecewise-linear values");
  const Bins& bins = market.bins().pricing_bins;
  const CostParams costs = market.costs();
  ScenarioResult out;
  out.label = "first_degree";
  out.per_segment = detail::empty_segments(bins);
  for (std::size_t i = 0; i < market.size(); ++i) {
    const int size = market.customer_size(i);
    const double q = size;
    const double mu = market.mean(i);
    const double sigma = market.sigma();
    const double threshold = costs.c2 + costs.c1 / q;  // per-unit break-even value
    double buy = 0.0;
    double revenue = 0.0;
    if (sigma > 0.0) {
      const double z = (threshold - mu) / sigma;
      buy = dist::survival(market.family(), z);
      // E[v 1{v >= t}] = mu S(z) - sigma E[eps 1{eps < z}]
      revenue = q * (mu * buy - sigma * dist::partial_mean_below(market.family(), z));
    } else if (mu >= threshold) {
      buy = 1.0;
      revenue = q * mu;
    }
    const double cost = buy * (costs.c1 + costs.c2 * q);
    out.revenue += revenue;
    out.cost += cost;
    out.expected_buyers += buy;
    if (auto k = bins.find(size)) {
      auto& s = out.per_segment[*k];
      s.revenue += revenue;
      s.cost += cost;
      s.profit += revenue - cost;
      s.expected_buyers += buy;
    }
  }
  out.profit = out.revenue - out.cost;
  out.consumer_welfare = 0.0;
  out.social_welfare = out.profit;
  return out;
}

struct ThirdDegreeBySize {
  IndividualResult individual;
  ScenarioResult scenario;
};

/// Each size group pays its own linear rate and cannot buy elsewhere.
inline ThirdDegreeBySize third_degree_by_size(const Market& market, const OptimizeConfig& cfg = {}) {
  ThirdDegreeBySize out;
  out.individual = individually_optimized(market, cfg);
  const Bins& bins = market.bins().pricing_bins;
  std::vector<std::vector<std::size_t>> members(bins.size());
  for (std::size_t i = 0; i < market.size(); ++i)
    if (auto k = bins.find(market.customer_size(i))) members[*k].push_back(i);
  ScenarioResult total;
  total.label = "third_degree_size";
  total.per_segment = detail::empty_segments(bins);
  ProfitOptions popt = cfg.profit;
  popt.parallel = false;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    if (members[k].empty()) continue;
    const Market sub = market.subset(members[k]);
    const double rate = out.individual.schedule.rates[k];
    detail::accumulate(total,
                       scenario_from("", expected_profit(sub, PriceSchedule::linear(rate), popt)));
  }
  out.scenario = std::move(total);
  return out;
}

struct CovariateGroups {
  std::vector<std::vector<std::size_t>> groups;  // customer indices, ascending within a group
  std::vector<PriceSchedule> schedules;
  std::vector<ProfitReport> reports;
  ScenarioResult scenario;
};

/// Ranks customers by beta*X (descending, stable) and optimizes one schedule
/// per equally sized group; the remainder goes to the last group.
inline CovariateGroups third_degree_by_covariates(const Market& market, int groups,
                                                  SearchKind kind = SearchKind::via_origin,
                                                  const OptimizeConfig& cfg = {}) {
  if (groups < 1) throw DomainError("group count must be >= 1");
  if (static_cast<std::size_t>(groups) > market.size())
    throw DomainError("more groups than customers");
  std::vector<double> index(market.size());
  for (std::size_t i = 0; i < market.size(); ++i)
    index[i] = covariate_index(market.value_model(), market.customers()[i]);
  std::vector<std::size_t> order(market.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return index[a] > index[b]; });
  const std::size_t per = market.size() / static_cast<std::size_t>(groups);
  CovariateGroups out;
  out.scenario.label = "third_degree_covariates";
  for (int g = 0; g < groups; ++g) {
    const std::size_t lo = static_cast<std::size_t>(g) * per;
    const std::size_t hi = g + 1 == groups ? market.size() : lo + per;
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                 order.begin() + static_cast<std::ptrdiff_t>(hi));
    std::sort(idx.begin(), idx.end());
    const OptimizeResult r = optimize_schedule(market.subset(idx), kind, cfg);
    out.groups.push_back(std::move(idx));
    out.schedules.push_back(r.schedule);
    out.reports.push_back(r.report);
    detail::accumulate(out.scenario, scenario_from("", r.report));
  }
  return out;
}

/// Replaces every mean value with the population average.
inline Market homogenize_demand(const Market& market) {
  const auto& mu = market.means();
  if (mu.empty()) return market;
  if (std::all_of(mu.begin(), mu.end(), [&](double m) { return m == mu.front(); })) return market;
  long double sum = 0;
  for (double m : mu) sum += m;
  const double avg = static_cast<double>(sum / static_cast<long double>(mu.size()));
  return market.with_means(std::vector<double>(mu.size(), avg));
}

struct CostPoint {
  CostParams costs;
  PriceSchedule schedule;
  ProfitReport report;
};

struct PassThrough {
  double c1 = 0.0;
  double c2_from = 0.0;
  double c2_to = 0.0;
  std::vector<double> per_bin;  // d rate / d c2
  double mean = 0.0;
};

struct CostSweep {
  std::vector<CostPoint> points;  // c1-major, in list order
  std::vector<PassThrough> pass_through;
};

/// Re-optimizes the schedule at every (c1, c2) pair. Pass-through compares
/// each c2 with the first c2 in the list at the same c1.
inline CostSweep cost_sweep(const Market& market, const std::vector<double>& c1_list,
                            const std::vector<double>& c2_list,
                            SearchKind kind = SearchKind::via_origin,
                            const OptimizeConfig& cfg = {}) {
  if (c1_list.empty() || c2_list.empty()) throw ConfigError("cost grids must be nonempty");
  CostSweep out;
  for (double c1 : c1_list) {
    const std::size_t base = out.points.size();
    for (double c2 : c2_list) {
      CostParams c{c1, c2};
      validate(c);
      const OptimizeResult r = optimize_schedule(market.with_costs(c), kind, cfg);
      out.points.push_back({c, r.schedule, r.report});
    }
    for (std::size_t j = 1; j < c2_list.size(); ++j) {
      const double d = c2_list[j] - c2_list[0];
      if (d == 0.0) continue;
      const auto& a = out.points[base].schedule.rates;
      const auto& b = out.points[base + j].schedule.rates;
      PassThrough pt{c1, c2_list[0], c2_list[j], {}, 0.0};
      for (std::size_t k = 0; k < a.size(); ++k) pt.per_bin.push_back((b[k] - a[k]) / d);
      pt.mean = std::accumulate(pt.per_bin.begin(), pt.per_bin.end(), 0.0) /
                static_cast<double>(pt.per_bin.size());
      out.pass_through.push_back(std::move(pt));
    }
  }
  return out;
}

struct SimulatedOutcomes {
  std::vector<CustomerRecord> records;
  std::size_t selected = 0;  // rows where the override was applied
};

/// With probability p, overwrite success with membership of the favored size
/// bin (or its complement when inverted).
inline SimulatedOutcomes simulate_counterfactual_outcomes(std::vector<CustomerRecord> records,
                                                          double p, const Bins& bins,
                                                          std::size_t favored_bin,
                                                          std::uint64_t seed,
                                                          bool inverted = false) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("flip probability must lie in [0, 1]");
  if (favored_bin >= bins.size()) throw DomainError("favored bin out of range");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(p);
  SimulatedOutcomes out;
  for (auto& r : records) {
    if (!flip(rng)) continue;
    ++out.selected;
    const bool in_bin = bins.contains(favored_bin, r.size);
    r.success = inverted ? !in_bin : in_bin;
  }
  out.records = std::move(records);
  return out;
}

struct IcGap {
  PriceSchedule linear_star = PriceSchedule::linear(0.0);
  PriceSchedule p_star;
  PriceSchedule p_tilde;
  double pi_linear = 0.0;
  double pi_star = 0.0;
  double pi_tilde = 0.0;
  double naive = 0.0;  // sum of local profits
  double gap = 0.0;    // pi_star - pi_tilde
  double relative_gap = 0.0;
  std::vector<double> segment_gap;
  double spread_star = 0.0;
  double spread_tilde = 0.0;
  ProfitReport star_report;
  ProfitReport tilde_report;
};

inline IcGap ic_gap_analysis(const Market& market, const OptimizeConfig& cfg = {}) {
  IcGap out;
  const OptimizeResult lin = optimize_schedule(market, SearchKind::linear, cfg);
  const IndividualResult ind = individually_optimized(market, cfg);
  OptimizeConfig joint = cfg;
  joint.seeds.push_back(lin.schedule);
  joint.seeds.push_back(ind.schedule);
  const OptimizeResult star = optimize_schedule(market, SearchKind::via_origin, joint);
  out.linear_star = lin.schedule;
  out.p_star = star.schedule;
  out.p_tilde = ind.schedule;
  out.pi_linear = lin.report.expected_profit;
  out.pi_star = star.report.expected_profit;
  out.pi_tilde = ind.true_report.expected_profit;
  out.naive = ind.naive_profit;
  out.gap = out.pi_star - out.pi_tilde;
  out.relative_gap = out.pi_star != 0.0 ? out.gap / out.pi_star : 0.0;
  for (std::size_t k = 0; k < star.report.per_segment.size(); ++k)
    out.segment_gap.push_back(star.report.per_segment[k].profit -
                              ind.true_report.per_segment[k].profit);
  out.spread_star = detail::rate_spread(star.schedule);
  out.spread_tilde = detail::rate_spread(ind.schedule);
  out.star_report = star.report;
  out.tilde_report = ind.true_report;
  return out;
}

// ---------------------------------------------------------------------------
// Randomized price experiment and its recovery

struct ExperimentConfig {
  std::vector<double> arm_prices{0.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0};
  std::size_t rows = 1000000;
  std::uint64_t seed = 1;
};

struct ExperimentRow {
  std::size_t arm = 0;
  bool success = false;
  std::optional<std::size_t> observed_cell;  // size and covariates, buyers only
  // oracle columns, never read by the recovery
  std::size_t true_cell = 0;
  double latent_value = 0.0;
};

struct ExperimentData {
  std::vector<CustomerRecord> cells;  // the base rows that get concatenated
  std::vector<double> arm_prices;
  std::vector<ExperimentRow> rows;
};

/// Concatenates copies of the base market up to the requested row count,
/// draws a value per row, assigns a random arm, and hides the size of
/// every failed deal.
inline ExperimentData simulate_experiment(const Market& base, const ExperimentConfig& cfg) {
  if (base.size() == 0) throw DomainError("experiment needs a nonempty base market");
  if (cfg.arm_prices.empty()) throw ConfigError("experiment needs at least one arm");
  for (double p : cfg.arm_prices)
    if (!(p >= 0.0)) throw DomainError("arm prices must be nonnegative");
  ExperimentData out;
  out.cells = base.customers();
  out.arm_prices = cfg.arm_prices;
  out.rows.resize(cfg.rows);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick_arm(0, cfg.arm_prices.size() - 1);
  for (std::size_t r = 0; r < cfg.rows; ++r) {
    ExperimentRow& row = out.rows[r];
    row.true_cell = r % base.size();
    row.latent_value = base.mean(row.true_cell) + base.sigma() * dist::draw(base.family(), rng);
    row.arm = pick_arm(rng);
    row.success = row.latent_value >= cfg.arm_prices[row.arm];
    if (row.success) row.observed_cell = row.true_cell;
  }
  return out;
}

struct ArmRecovery {
  double price = 0.0;
  std::size_t rows = 0;
  double buy_share = 0.0;  // Prob(v >= price)
  bool skipped = false;
  std::string diagnostic;
  std::size_t clipped_cells = 0;
  std::vector<double> below;  // cell distribution given v < price
};

struct ExperimentRecovery {
  std::vector<double> marginal;  // cell distribution from zero-price buyers
  std::vector<ArmRecovery> arms;
  std::vector<double> strata_cuts;  // positive arm prices, ascending
  // recovered joint mass: [pricing bin][value stratum], strata split at strata_cuts
  std::vector<std::vector<double>> binned;
  std::vector<CustomerRecord> filled;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<double> strata_cuts(const std::vector<double>& arm_prices) {
  std::vector<double> cuts;
  for (double p : arm_prices)
    if (p > 0.0) cuts.push_back(p);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

inline std::size_t stratum_of(const std::vector<double>& cuts, double v) {
  return static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

inline std::vector<std::vector<double>> normalized(std::vector<std::vector<double>> m) {
  double total = 0.0;
  for (auto& row : m)
    for (double& x : row) {
      x = std::max(0.0, x);
      total += x;
    }
  if (total > 0.0)
    for (auto& row : m)
      for (double& x : row) x /= total;
  return m;
}

}  // namespace detail

/// Ground-truth joint of (pricing bin of size, value stratum) over the
/// simulated rows. Oracle only.
inline std::vector<std::vector<double>> true_binned_joint(const ExperimentData& data,
                                                          const Bins& bins) {
  const auto cuts = detail::strata_cuts(data.arm_prices);
  std::vector<std::vector<double>> m(bins.size(), std::vector<double>(cuts.size() + 1, 0.0));
  for (const auto& row : data.rows) {
    const auto k = bins.find(data.cells[row.true_cell].size);
    if (!k) continue;
    m[*k][detail::stratum_of(cuts, row.latent_value)] += 1.0;
  }
  return detail::normalized(std::move(m));
}

inline double total_variation(const std::vector<std::vector<double>>& a,
                              const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) throw DomainError("joint tables differ in shape");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) throw DomainError("joint tables differ in shape");
    for (std::size_t j = 0; j < a[i].size(); ++j) d += std::abs(a[i][j] - b[i][j]);
  }
  return 0.5 * d;
}

/// Recovers the cell distribution below each arm price from the zero-price
/// arm and the total-probability identity, then fills in failed deals with
/// joint draws of (size, covariates) from that distribution.
inline ExperimentRecovery experimental_recovery(const ExperimentData& data, const Bins& bins,
                                                std::uint64_t seed = 1) {
  const std::size_t n_cells = data.cells.size();
  const std::size_t n_arms = data.arm_prices.size();
  const auto zero = std::find(data.arm_prices.begin(), data.arm_prices.end(), 0.0);
  if (zero == data.arm_prices.end()) throw ConfigError("experiment needs a zero-price arm");
  const std::size_t arm0 = static_cast<std::size_t>(zero - data.arm_prices.begin());

  std::vector<std::size_t> rows(n_arms, 0);
  std::vector<std::size_t> buyers(n_arms, 0);
  std::vector<std::vector<double>> buyer_cells(n_arms, std::vector<double>(n_cells, 0.0));
  for (const auto& row : data.rows) {
    ++rows[row.arm];
    if (!row.success) continue;
    ++buyers[row.arm];
    buyer_cells[row.arm][*row.observed_cell] += 1.0;
  }
  for (std::size_t a = 0; a < n_arms; ++a)
    if (rows[a] == 0) throw DomainError("every arm needs at least one row");
  if (buyers[arm0] == 0) throw DomainError("no buyers at the zero-price arm");

  ExperimentRecovery out;
  out.marginal = buyer_cells[arm0];
  for (double& x : out.marginal) x /= static_cast<double>(buyers[arm0]);

  for (std::size_t a = 0; a < n_arms; ++a) {
    ArmRecovery arm;
    arm.price = data.arm_prices[a];
    arm.rows = rows[a];
    arm.buy_share = static_cast<double>(buyers[a]) / static_cast<double>(rows[a]);
    const double below_mass = 1.0 - arm.buy_share;
    if (a == arm0) {
      arm.below = out.marginal;  // zero-price failures: nothing to separate
      if (!(below_mass > 0.0)) arm.skipped = true;
      out.arms.push_back(std::move(arm));
      continue;
    }
    if (!(below_mass > 0.0)) {
      arm.skipped = true;
      arm.diagnostic = "Prob(v < " + std::to_string(arm.price) + ") is zero; conditional undefined";
      out.warnings.push_back(arm.diagnostic);
      out.arms.push_back(std::move(arm));
      continue;
    }
    arm.below.resize(n_cells);
    double total = 0.0;
    for (std::size_t c = 0; c < n_cells; ++c) {
      const double above = buyers[a] ? buyer_cells[a][c] / static_cast<double>(buyers[a]) : 0.0;
      double x = (out.marginal[c] - above * arm.buy_share) / below_mass;
      if (x < 0.0) {
        x = 0.0;
        ++arm.clipped_cells;
      }
      arm.below[c] = x;
      total += x;
    }
    if (!(total > 0.0)) {
      arm.skipped = true;
      arm.diagnostic = "no positive mass below " + std::to_string(arm.price);
      out.warnings.push_back(arm.diagnostic);
      arm.below.clear();
      out.arms.push_back(std::move(arm));
      continue;
    }
    for (double& x : arm.below) x /= total;
    if (arm.clipped_cells > 0)
      out.warnings.push_back("arm " + std::to_string(arm.price) + ": clipped " +
                             std::to_string(arm.clipped_cells) +
                             " negative cell masses and renormalized");
    out.arms.push_back(std::move(arm));
  }

  // Joint over (bin, stratum): mass(cell, v < cut) from each arm, differenced.
  out.strata_cuts = detail::strata_cuts(data.arm_prices);
  const auto& cuts = out.strata_cuts;
  std::vector<std::vector<double>> below_cut(cuts.size(), std::vector<double>(bins.size(), 0.0));
  std::vector<double> all(bins.size(), 0.0);
  std::vector<int> cell_bin(n_cells, -1);
  for (std::size_t c = 0; c < n_cells; ++c)
    if (auto k = bins.find(data.cells[c].size)) cell_bin[c] = static_cast<int>(*k);
  for (std::size_t c = 0; c < n_cells; ++c)
    if (cell_bin[c] >= 0) all[static_cast<std::size_t>(cell_bin[c])] += out.marginal[c];
  for (std::size_t j = 0; j < cuts.size(); ++j) {
    // several arms may share a price; average their estimates
    int used = 0;
    for (const auto& arm : out.arms) {
      if (arm.price != cuts[j]) continue;
      ++used;
      if (arm.skipped) continue;  // nobody below this price
      const double mass = 1.0 - arm.buy_share;
      for (std::size_t c = 0; c < n_cells; ++c)
        if (cell_bin[c] >= 0) below_cut[j][static_cast<std::size_t>(cell_bin[c])] += mass * arm.below[c];
    }
    if (used > 1)
      for (double& x : below_cut[j]) x /= used;
  }
  out.binned.assign(bins.size(), std::vector<double>(cuts.size() + 1, 0.0));
  for (std::size_t k = 0; k < bins.size(); ++k) {
    double prev = 0.0;
    for (std::size_t j = 0; j < cuts.size(); ++j) {
      out.binned[k][j] = below_cut[j][k] - prev;
      prev = below_cut[j][k];
    }
    out.binned[k][cuts.size()] = all[k] - prev;
  }
  out.binned = detail::normalized(std::move(out.binned));

  // Fill failed rows with joint draws from the arm's below-price distribution.
  std::mt19937_64 rng(seed);
  std::vector<std::discrete_distribution<std::size_t>> draw(n_arms);
  for (std::size_t a = 0; a < n_arms; ++a)
    if (!out.arms[a].below.empty())
      draw[a] = std::discrete_distribution<std::size_t>(out.arms[a].below.begin(),
                                                        out.arms[a].below.end());
  out.filled.reserve(data.rows.size());
  std::size_t dropped = 0;
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    const auto& row = data.rows[r];
    std::size_t cell = 0;
    if (row.success) {
      cell = *row.observed_cell;
    } else if (!out.arms[row.arm].below.empty()) {
      cell = draw[row.arm](rng);
    } else {
      ++dropped;
      continue;
    }
    CustomerRecord rec = data.cells[cell];
    char buf[32];
    std::snprintf(buf, sizeof buf, "x%08zu", r + 1);
    rec.id = buf;
    rec.success = row.success;
    rec.observed_unit_price = data.arm_prices[row.arm];
    out.filled.push_back(std::move(rec));
  }
  if (dropped > 0)
    out.warnings.push_back(std::to_string(dropped) + " failed rows had no recoverable distribution");
  return out;
}

}  // namespace tariffkit
