// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is the number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "tariffkit/tariffkit.hpp"

#ifndef TARIFFKIT_CLI
#define TARIFFKIT_CLI "tariffkit"
#endif

namespace fs = std::filesystem;
using namespace tariffkit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double limit_s;  // 0: no time limit
  std::function<Outcome()> run;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

const Bins kPricing{{0, 10, 20, 50, 100}};

// ---------------------------------------------------------------------------
// shared fixtures

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t s) : eng(s) {}
  double u(double a, double b) { return std::uniform_real_distribution<double>(a, b)(eng); }
  int i(int a, int b) { return std::uniform_int_distribution<int>(a, b)(eng); }
};

// Customers given directly by (mean value, size).
Market typed_market(const std::vector<std::pair<double, int>>& types, double sigma, CostParams costs,
                    ErrorFamily fam = ErrorFamily::logistic) {
  std::vector<CustomerRecord> recs;
  std::vector<double> mus;
  for (std::size_t k = 0; k < types.size(); ++k) {
    CustomerRecord c;
    c.id = customer_id(k);
    c.year = 2020;
    c.size = types[k].second;
    recs.push_back(c);
    mus.push_back(types[k].first);
  }
  ValueModel m;
  m.beta = {{kInterceptName, 0.0}};
  m.year_effects = {{2020, 0.0}};
  m.estimation_bins = Bins{{1}};
  m.size_effects = {0.0};
  m.sigma = sigma;
  m.error_family = fam;
  return Market(recs, m, costs).with_means(mus);
}

// Random synthetic markets for the ordering and fee checks. The family was
// fixed before any of the checks were run on it.
Market random_market(std::uint64_t seed, int n) {
  Rng r(seed);
  const auto s = reference_settings(n);
  ValueModel m;
  m.beta = {{kInterceptName, r.u(2500, 4500)}, {"z", 400.0}};
  m.year_effects = {{2020, 0.0}};
  m.estimation_bins = Bins{{1, 20, 50}};
  m.size_effects = {0.0, r.u(-1200, 300), r.u(-1500, 300)};
  m.sigma = r.u(250, 600);
  std::discrete_distribution<std::size_t> pick(s.size_weights.begin(), s.size_weights.end());
  std::vector<CustomerRecord> cs;
  for (int k = 0; k < n; ++k) {
    CustomerRecord c;
    c.id = customer_id(static_cast<std::size_t>(k));
    c.year = 2020;
    c.size = s.size_values[pick(r.eng)];
    c.covariates["z"] = std::normal_distribution<double>(0, 1)(r.eng);
    cs.push_back(c);
  }
  const CostParams costs{r.u(1000, 5000), r.u(300, 1200)};
  return Market(cs, m, costs);
}

PriceSchedule random_schedule(Rng& r, bool fees) {
  std::vector<double> rates(5);
  for (auto& x : rates) x = r.u(0, 4000);
  const double fee = fees ? r.u(0, 8000) : 0.0;
  switch (r.i(0, 3)) {
    case 0: return PriceSchedule::linear(rates[0]);
    case 1: return PriceSchedule::two_part(fee, rates[0]);
    case 2: return PriceSchedule::via_origin(kPricing, rates, fee);
    default: return PriceSchedule::continuous(kPricing, rates, fee);
  }
}

// ---------------------------------------------------------------------------
// 1

Outcome concave_all_or_nothing() {
  Rng r(101);
  long cases = 0, hits = 0, nonconcave = 0;
  for (int s = 0; s < 50; ++s) {
    PriceSchedule p;
    if (s % 5 == 0) {
      p = PriceSchedule::linear(r.u(100, 4000));
    } else if (s % 5 == 1) {
      const double fee = r.u(1, 10000);
      p = PriceSchedule::two_part(fee, r.u(100, 4000));
    } else {
      std::vector<double> rates(5);
      for (auto& x : rates) x = r.u(100, 4000);
      std::sort(rates.rbegin(), rates.rend());
      p = PriceSchedule::continuous(kPricing, rates, s % 2 ? r.u(0, 10000) : 0.0);
    }
    if (!is_concave_increasing(p).concave_increasing) ++nonconcave;
    Rng cr(1000);  // same 1,000 customers for every schedule
    for (int c = 0; c < 1000; ++c) {
      const double v = cr.u(0, 5000);
      const int size = cr.i(1, 200);
      const int q = solve_purchase(v, size, p).quantity;
      ++cases;
      if (q == 0 || q == size) ++hits;
    }
  }
  return {hits == cases && nonconcave == 0,
          fmt("%ld/%ld purchases in {0, size}; %ld generated schedules not concave", hits, cases,
              nonconcave)};
}

// 2

Outcome choice_oracle() {
  Rng r(202);
  const double alphas[3] = {1.0, 0.9, 0.75};
  int mismatches = 0, n = 0;
  int kinds[4] = {0, 0, 0, 0};
  for (int t = 0; t < 10000; ++t) {
    // random bin layouts as well as the standard one
    Bins bins = kPricing;
    if (t % 2) {
      std::vector<int> starts{0};
      const int k = r.i(1, 4);
      for (int j = 0; j < k; ++j) starts.push_back(starts.back() + r.i(1, 60));
      bins = Bins(starts);
    }
    std::vector<double> rates(bins.size());
    for (auto& x : rates) x = r.u(0, 4000);
    const double fee = r.u(0, 1) < 0.5 ? 0.0 : r.u(0, 8000);
    PriceSchedule p;
    const int kind = t % 4;
    switch (kind) {
      case 0: p = PriceSchedule::linear(rates[0]); break;
      case 1: p = PriceSchedule::two_part(fee, rates[0]); break;
      case 2: p = PriceSchedule::via_origin(bins, rates, fee); break;
      default: p = PriceSchedule::continuous(bins, rates, fee); break;
    }
    ++kinds[kind];
    const double alpha = alphas[(t / 4) % 3];
    const double v = r.u(0, 5000);
    const int size = r.i(1, 300);
    const auto a = solve_purchase(v, size, p, alpha);
    const auto b = brute_force_purchase(v, size, p, alpha);
    ++n;
    if (a.quantity != b.quantity) ++mismatches;
  }
  return {mismatches == 0,
          fmt("%d mismatches in %d instances (linear %d, two_part %d, via_origin %d, continuous %d; "
              "alpha 1, 0.9, 0.75)",
              mismatches, n, kinds[0], kinds[1], kinds[2], kinds[3])};
}

// 3

Outcome two_rate_example() {
  const auto p = PriceSchedule::via_origin(Bins{{0, 101}}, {2000, 2500});
  const auto d = solve_purchase(2200, 120, p);
  const auto b = brute_force_purchase(2200, 120, p);
  return {d.quantity == 100 && b.quantity == 100,
          fmt("v=2200, size=120, 2000/unit up to 100 and 2500/unit above: q*=%d (brute force %d), "
              "surplus %.2f",
              d.quantity, b.quantity, d.surplus)};
}

// 4

Outcome envelope_vs_monte_carlo() {
  Rng r(404);
  int inside = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    std::vector<std::pair<double, int>> types;
    const int n = r.i(8, 12);
    for (int k = 0; k < n; ++k) {
      const double mu = r.u(500, 4000);
      types.emplace_back(mu, r.i(1, 150));
    }
    const double sigma = r.u(100, 800);
    const double c1 = r.u(0, 5000);
    const double c2 = r.u(0, 1200);
    const Market m = typed_market(types, sigma, {c1, c2}, t % 2 ? ErrorFamily::normal : ErrorFamily::logistic);
    const auto p = random_schedule(r, true);
    const auto env = expected_profit_envelope(m, p);
    ProfitOptions o;
    o.method = ProfitMethod::monte_carlo;
    o.draws = 100000;
    o.seed = 5000 + static_cast<std::uint64_t>(t);
    const auto sim = expected_profit_monte_carlo(m, p, o);
    const double z = std::abs(env.expected_profit - sim.expected_profit) / std::max(*sim.mc_std_error, 1e-12);
    worst = std::max(worst, z);
    if (z <= 3.0) ++inside;
  }
  return {inside >= 99, fmt("%d/100 markets within 3 MC standard errors (R=100000); largest |z| %.2f",
                            inside, worst)};
}

// 5

const std::vector<std::string> kCovariates{"log_feature1", "feature2", "computer_software",
                                           "marketing_advertising", "log_firm_age"};
const std::vector<double> kTruth{2260.56, 133.79, 686.64, 39.18, -224.29, -40.99, 70.2, -657.40, -835.73, 385.44};

double tolerance_for(double truth) { return std::abs(truth) < 100 ? 15.0 : 0.05 * std::abs(truth); }

std::vector<double> recovered(int n, std::uint64_t seed) {
  const auto sm = generate_synthetic_market(reference_settings(n), seed);
  EstimationConfig cfg;
  cfg.covariate_names = kCovariates;
  const FitResult fit = fit_mle(augment_zero_price(sm.market.customers()), cfg);
  if (!fit.converged) return {};
  return fit.parameters;
}

// RMS over parameters of error / tolerance.
double normalized_rms(const std::vector<double>& est) {
  double acc = 0.0;
  for (std::size_t j = 0; j < kTruth.size(); ++j) {
    const double e = (est[j] - kTruth[j]) / tolerance_for(kTruth[j]);
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(kTruth.size()));
}

Outcome mle_recovery() {
  constexpr std::uint64_t kSeed = 2024;  // fixed before the first run
  const auto big = recovered(50000, kSeed);
  if (big.size() != kTruth.size()) return {false, "fit at N=50000 did not converge"};
  int within = 0;
  std::string worst;
  double worst_ratio = 0.0;
  const char* names[] = {"intercept", "log_feature1", "feature2", "computer_software", "marketing_advertising",
                         "log_firm_age", "year_2021", "size_bin_20", "size_bin_50", "sigma"};
  for (std::size_t j = 0; j < kTruth.size(); ++j) {
    const double ratio = std::abs(big[j] - kTruth[j]) / tolerance_for(kTruth[j]);
    if (ratio <= 1.0) ++within;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst = names[j];
    }
  }
  // error scaling: mean over seeds of the normalized RMS error at 5k and 50k
  double rms_small = 0.0, rms_big = normalized_rms(big);
  int seeds = 1;
  for (std::uint64_t s = kSeed + 1; s < kSeed + 8; ++s) {
    const auto e = recovered(50000, s);
    if (e.size() != kTruth.size()) return {false, "fit at N=50000 did not converge"};
    rms_big += normalized_rms(e);
    ++seeds;
  }
  rms_big /= seeds;
  for (std::uint64_t s = kSeed; s < kSeed + 8; ++s) {
    const auto e = recovered(5000, s);
    if (e.size() != kTruth.size()) return {false, "fit at N=5000 did not converge"};
    rms_small += normalized_rms(e);
  }
  rms_small /= 8;
  const double growth = rms_small / rms_big;
  const double root10 = std::sqrt(10.0);
  const bool scaling = growth >= root10 / 2 && growth <= 2 * root10;
  return {within == static_cast<int>(kTruth.size()) && scaling,
          fmt("N=50000 seed %llu: %d/10 parameters within tolerance (worst %s at %.2fx tolerance); "
              "error growth 5000 vs 50000 over 8 seeds %.2f (sqrt(10)=%.2f, accepted [%.2f, %.2f])",
              static_cast<unsigned long long>(kSeed), within, worst.c_str(), worst_ratio, growth, root10,
              root10 / 2, 2 * root10)};
}

// 6

CustomerRecord sold(int size, double snc) {
  CustomerRecord c;
  c.id = "d";
  c.year = 2021;
  c.size = size;
  c.success = true;
  c.snc_value = snc;
  return c;
}

Outcome cost_calibration() {
  struct Case {
    std::vector<CustomerRecord> recs;
    double c1, c2;
  };
  std::vector<Case> cases{
      {{sold(4, 1868)}, 2467.20, 764.45},
      {{sold(4, 0), sold(9, 0)}, 1253.0, 601.0},
      // (1868 + 4670) / 2 deals; 0.35 * 6538 / 14 units
      {{sold(4, 1868), sold(10, 4670)}, 1253 + 0.65 * 3269.0, 601 + 0.35 * 6538.0 / 14.0},
  };
  auto failed = sold(50, 9340);
  failed.success = false;
  cases[2].recs.push_back(failed);
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto got = calibrate_costs(c.recs);
    worst = std::max({worst, std::abs(got.c1 - c.c1), std::abs(got.c2 - c.c2)});
  }
  const auto one = calibrate_costs(cases[0].recs);
  return {worst <= 1e-9, fmt("single deal SNC=1868, size 4: c1=%.2f c2=%.2f; largest error over %zu fixtures %.1e",
                             one.c1, one.c2, cases.size(), worst)};
}

// 7

Outcome grid_bisection_checks() {
  std::vector<std::string> notes;
  bool ok = true;
  // K=1: linear profit on a synthetic market, oracle scans every integer price
  {
    const auto sm = generate_synthetic_market(reference_settings(300), 71);
    const Market m = sm.market.with_costs({3630, 760});
    auto f = [&](const std::vector<double>& x) {
      return expected_profit(m, PriceSchedule::linear(x[0])).expected_profit;
    };
    double best = -1e300, arg = 0;
    for (int p = 0; p <= 5000; ++p) {
      const double v = f({static_cast<double>(p)});
      if (v > best) {
        best = v;
        arg = p;
      }
    }
    GridBisectionConfig cfg;
    const auto r = grid_bisection(f, cfg);
    const double d = std::abs(r.argmax[0] - arg);
    ok = ok && d <= 1.0;
    notes.push_back(fmt("linear profit |d|=%.2f", d));
  }
  // K=2: rotated quadratic, oracle is a 1-unit grid around the 10-unit grid winner
  auto refine_oracle = [](const std::function<double(double, double)>& f, double lo0, double hi0,
                          double lo1, double hi1) {
    double best = -1e300, a0 = 0, a1 = 0;
    const double s0 = (hi0 - lo0) / 500, s1 = (hi1 - lo1) / 500;
    for (int i = 0; i <= 500; ++i)
      for (int j = 0; j <= 500; ++j) {
        const double v = f(lo0 + i * s0, lo1 + j * s1);
        if (v > best) {
          best = v;
          a0 = lo0 + i * s0;
          a1 = lo1 + j * s1;
        }
      }
    const double c0 = a0, c1 = a1;
    for (double x = std::max(lo0, c0 - s0); x <= std::min(hi0, c0 + s0); x += 0.25)
      for (double y = std::max(lo1, c1 - s1); y <= std::min(hi1, c1 + s1); y += 0.25) {
        const double v = f(x, y);
        if (v > best) {
          best = v;
          a0 = x;
          a1 = y;
        }
      }
    return std::vector<double>{a0, a1};
  };
  {
    auto f = [](double x, double y) {
      const double a = x - 1717.3, b = y - 3021.9;
      return -(a * a + 1.2 * a * b + b * b);
    };
    const auto oracle = refine_oracle(f, 0, 5000, 0, 5000);
    GridBisectionConfig cfg;
    cfg.dims = 2;
    const auto r = grid_bisection([&](const std::vector<double>& x) { return f(x[0], x[1]); }, cfg);
    const double d = std::max(std::abs(r.argmax[0] - oracle[0]), std::abs(r.argmax[1] - oracle[1]));
    ok = ok && d <= 1.0;
    notes.push_back(fmt("rotated bowl |d|=%.2f", d));
  }
  // K=2: two-part profit on a small synthetic market. The surface has a nearly
  // flat ridge along the fee, so this one is judged on value, not location.
  {
    const auto sm = generate_synthetic_market(reference_settings(40), 72);
    const Market m = sm.market.with_costs({3630, 760});
    auto f = [&](double fee, double rate) {
      return expected_profit(m, PriceSchedule::two_part(fee, rate)).expected_profit;
    };
    const auto oracle = refine_oracle(f, 0, 20000, 0, 5000);
    GridBisectionConfig cfg;
    cfg.dims = 2;
    cfg.lower = {0, 0};
    cfg.upper = {20000, 5000};
    const auto r = grid_bisection([&](const std::vector<double>& x) { return f(x[0], x[1]); }, cfg);
    const double best = f(oracle[0], oracle[1]);
    const double gap = (best - r.value) / std::abs(best);
    const double d = std::max(std::abs(r.argmax[0] - oracle[0]), std::abs(r.argmax[1] - oracle[1]));
    ok = ok && gap <= 1e-5;
    notes.push_back(fmt("two-part profit relative value gap %.1e (argmax |d|=%.2f on a flat ridge)", gap, d));
  }
  // iteration counts
  int count_ok = 0, count_n = 0;
  for (double width : {5000.0, 20000.0, 1000.0, 4096.0, 3.0})
    for (double zoom : {0.25, 0.5, 0.6, 0.9}) {
      GridBisectionConfig cfg;
      cfg.upper = {width};
      cfg.zoom = zoom;
      const auto r = grid_bisection([](const std::vector<double>& x) { return std::cos(x[0]); }, cfg);
      const int expect = std::max(1, static_cast<int>(std::ceil((std::log(width) - std::log(1.0)) / -std::log(zoom) - 1e-12)));
      ++count_n;
      if (r.iterations == expect) ++count_ok;
    }
  ok = ok && count_ok == count_n;
  std::string joined;
  for (const auto& s : notes) joined += s + "; ";
  return {ok, joined + fmt("iteration count matches formula %d/%d", count_ok, count_n)};
}

// 8 and 10 share the random markets

struct ChainRow {
  IcGap gap;
  double first_profit = 0.0;
  double first_cs = 0.0;
  bool welfare_identity = true;
  double two_part = 0.0;
  double via_origin_fee = 0.0;
};

std::vector<ChainRow>& chain_rows() {
  static std::vector<ChainRow> rows;
  if (!rows.empty()) return rows;
  for (std::uint64_t k = 1; k <= 20; ++k) {
    const Market m = random_market(1000 + k, 150);
    ChainRow row;
    row.gap = ic_gap_analysis(m);
    const auto fd = first_degree(m);
    row.first_profit = fd.profit;
    row.first_cs = fd.consumer_welfare;
    auto identity = [&](const ProfitReport& r) {
      return std::abs(r.social_welfare() - (r.expected_profit + r.consumer_surplus)) <= 1e-9 * (1 + std::abs(r.social_welfare()));
    };
    OptimizeConfig seeded;
    seeded.seeds = {row.gap.linear_star};
    const auto two = optimize_schedule(m, SearchKind::two_part, seeded);
    seeded.seeds = {row.gap.linear_star, row.gap.p_star, two.schedule};
    seeded.grid.points_per_dim = 4;
    const auto vof = optimize_schedule(m, SearchKind::via_origin_fee, seeded);
    row.two_part = two.report.expected_profit;
    row.via_origin_fee = vof.report.expected_profit;
    row.welfare_identity = identity(row.gap.star_report) && identity(row.gap.tilde_report) &&
                           identity(two.report) && identity(vof.report) &&
                           std::abs(fd.social_welfare - (fd.profit + fd.consumer_welfare)) <= 1e-9 * (1 + std::abs(fd.profit));
    rows.push_back(row);
  }
  return rows;
}

Outcome ordering_chain() {
  const auto& rows = chain_rows();
  int fails[4] = {0, 0, 0, 0};
  double worst[4] = {0, 0, 0, 0};
  bool cs_zero = true, identity = true;
  for (const auto& r : rows) {
    const double chain[5] = {r.gap.pi_linear, r.gap.pi_tilde, r.gap.pi_star, r.gap.naive, r.first_profit};
    const double scale = std::max(1.0, std::abs(r.gap.pi_star));
    for (int k = 0; k < 4; ++k) {
      const double slack = (chain[k + 1] - chain[k]) / scale;
      worst[k] = std::min(worst[k], slack);
      if (slack < -1e-6) ++fails[k];
    }
    cs_zero = cs_zero && r.first_cs == 0.0;
    identity = identity && r.welfare_identity;
  }
  const bool ok = fails[0] + fails[1] + fails[2] + fails[3] == 0 && cs_zero && identity;
  return {ok, fmt("violations per link over %zu markets: linear<=indiv %d (worst %.4f), indiv<=joint %d, "
                  "joint<=sum_local %d, sum_local<=first_degree %d; first-degree CS zero: %s; "
                  "social = profit + CS: %s",
                  rows.size(), fails[0], worst[0], fails[1], fails[2], fails[3], cs_zero ? "yes" : "no",
                  identity ? "yes" : "no")};
}

// 9

struct GapRun {
  double relative_gap;
  double spread_star;
  double spread_tilde;
};

GapRun gap_after_fit(const std::vector<CustomerRecord>& recs, const GeneratorSettings& s) {
  EstimationConfig cfg;
  cfg.covariate_names = kCovariates;
  const FitResult fit = fit_mle(augment_zero_price(recs), cfg);
  const Market m(recs, fit.value_model, s.costs, SizeBinConfig{}, 2021);
  const IcGap g = ic_gap_analysis(m);
  return {g.relative_gap, g.spread_star, g.spread_tilde};
}

Outcome ic_gap_contrast() {
  constexpr std::uint64_t kSeed = 11;
  const auto s = reference_settings(2000);
  const auto sm = generate_synthetic_market(s, kSeed);
  const auto& recs = sm.market.customers();
  const GapRun base = gap_after_fit(recs, s);
  // favour the middle size bin [20, 50) with probability 0.7
  const auto mod = simulate_counterfactual_outcomes(recs, 0.7, s.bins.pricing_bins, 2, kSeed + 1);
  const GapRun fav = gap_after_fit(mod.records, s);
  const double ratio = base.relative_gap > 0 ? fav.relative_gap / base.relative_gap
                                             : (fav.relative_gap > 0 ? INFINITY : 0.0);
  const bool ok = fav.relative_gap >= 5 * base.relative_gap && fav.relative_gap > 0 &&
                  fav.spread_star <= fav.spread_tilde;
  return {ok, fmt("relative gap unmodified %.5f, modified %.5f (ratio %.1f, need >= 5); modified spreads "
                  "joint %.0f <= individual %.0f",
                  base.relative_gap, fav.relative_gap, ratio, fav.spread_star, fav.spread_tilde)};
}

// 10

Outcome fixed_fee_dominance() {
  const auto& rows = chain_rows();
  int two_ok = 0, vof_ok = 0;
  for (const auto& r : rows) {
    const double scale = std::max(1.0, std::abs(r.gap.pi_star));
    if ((r.two_part - r.gap.pi_linear) / scale >= -1e-9) ++two_ok;
    if ((r.via_origin_fee - r.gap.pi_star) / scale >= -1e-9) ++vof_ok;
  }
  // negative size-value relation, positive per-unit cost
  const auto s = reference_settings(400);
  const auto sm = generate_synthetic_market(s, 1010);
  ValueModel vm = s.truth;
  vm.size_effects = {0.0, -900.0, -1300.0};
  const Market m(sm.market.customers(), vm, {3630, 760}, SizeBinConfig{}, 2021);
  const auto two = optimize_schedule(m, SearchKind::two_part);
  const double rate = two.schedule.rates[0];
  const bool ok = two_ok == static_cast<int>(rows.size()) && vof_ok == static_cast<int>(rows.size()) && rate > 760.0;
  return {ok, fmt("two_part >= linear on %d/%zu, via_origin+fee >= via_origin on %d/%zu; negative size-value "
                  "market: two-part rate %.0f vs c2 760 (fee %.0f)",
                  two_ok, rows.size(), vof_ok, rows.size(), rate, two.schedule.fixed_fee)};
}

// 11

Outcome experiment_recovery() {
  const auto sm = generate_synthetic_market(reference_settings(2000), 1111);
  ExperimentConfig cfg;
  cfg.rows = 1000000;
  cfg.seed = 12;
  const auto data = simulate_experiment(sm.market, cfg);
  const auto rec = experimental_recovery(data, kPricing, 13);
  const double tv = total_variation(rec.binned, true_binned_joint(data, kPricing));

  // degenerate: everybody buys at every arm
  const Market rich = typed_market({{1e7, 5}, {1e7, 40}, {1e7, 120}}, 10.0, {0, 0});
  ExperimentConfig small = cfg;
  small.rows = 6000;
  const auto d2 = experimental_recovery(simulate_experiment(rich, small), kPricing, 13);
  int skipped = 0, diagnosed = 0;
  for (const auto& a : d2.arms) {
    if (a.skipped) ++skipped;
    if (a.price > 0 && !a.diagnostic.empty()) ++diagnosed;
  }
  const int positive_arms = static_cast<int>(cfg.arm_prices.size()) - 1;
  const bool ok = tv < 0.05 && skipped == static_cast<int>(d2.arms.size()) && diagnosed == positive_arms;
  return {ok, fmt("1e6 rows, arms 0..5000: TV distance %.4f (need < 0.05); all-buy market: %d/%zu arms skipped, "
                  "%d diagnostics, e.g. \"%s\"",
                  tv, skipped, d2.arms.size(), diagnosed, d2.arms.back().diagnostic.c_str())};
}

// 12

Outcome two_customer_shapes() {
  Rng r(1212);
  int up_ok = 0, down_ok = 0;
  const int trials = 6;
  const int small_sizes[] = {3, 5, 8, 12, 15};
  const int large_sizes[] = {30, 45, 60, 100, 150};
  for (int t = 0; t < trials; ++t) {
    const int s1 = small_sizes[r.i(0, 4)];
    const int s2 = large_sizes[r.i(0, 4)];
    const double lo = r.u(1200, 2000), hi = lo + r.u(400, 1200);
    const std::size_t k1 = kPricing.index_of(s1), k2 = kPricing.index_of(s2);
    if (k1 == k2) continue;
    const CostParams costs{0, 500};
    const auto up = optimize_schedule(typed_market({{lo, s1}, {hi, s2}}, 50, costs), SearchKind::via_origin);
    const auto down = optimize_schedule(typed_market({{hi, s1}, {lo, s2}}, 50, costs), SearchKind::via_origin);
    if (up.schedule.rates[k1] <= up.schedule.rates[k2] + 1.0) ++up_ok;
    if (down.schedule.rates[k1] + 1.0 >= down.schedule.rates[k2]) ++down_ok;
  }
  return {up_ok == trials && down_ok == trials,
          fmt("positive relation: nondecreasing rates in %d/%d markets; negative relation: nonincreasing in %d/%d",
              up_ok, trials, down_ok, trials)};
}

// 13

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + TARIFFKIT_CLI + "\" " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
  const fs::path root = fs::current_path() / "acceptance_cli";
  fs::remove_all(root);
  std::vector<std::string> commands;
  std::vector<std::vector<int>> codes(2);
  for (int run = 0; run < 2; ++run) {
    const fs::path d = root / ("run" + std::to_string(run));
    fs::create_directories(d);
    {
      std::ofstream os(d / "observed.json");
      os << to_json(reference_settings(1).observed_schedule).dump(2) << '\n';
      std::ofstream cfg(d / "report.cfg");
      cfg << "simulate_customers = 300\nseed = 4\nout_dir = report\ngrid_points = 3\n";
    }
    const std::string p = "\"" + d.string() + "/";
    const std::string grid = " --points 3";
    std::vector<std::string> cmds{
        "simulate --customers 300 --seed 5 --out " + p + "deals.csv\" --truth-out " + p + "truth.json\"",
        "ingest --in " + p + "deals.csv\" --out " + p + "ingested.csv\" --observed-schedule " + p + "observed.json\"",
        "fit --in " + p + "ingested.csv\" --out " + p + "fit.json\" --seed 3 --bootstrap 3",
        "calibrate --in " + p + "deals.csv\" --out " + p + "costs.json\"",
        "optimize --in " + p + "deals.csv\" --fit " + p + "fit.json\" --costs " + p + "costs.json\" --seed 1" +
            grid + " --out " + p + "schedule.json\" --trace " + p + "trace.csv\"",
        "optimize --in " + p + "deals.csv\" --fit " + p + "fit.json\" --costs " + p + "costs.json\" --seed 1" +
            grid + " --smoothness 0.8 --mc-draws 200 --kind linear --out " + p + "schedule_smooth.json\"",
        "counterfactual --in " + p + "deals.csv\" --fit " + p + "fit.json\" --costs " + p + "costs.json\" --seed 1" +
            grid + " --out " + p + "cf.json\" --csv " + p + "cf.csv\" --segments " + p + "segments.csv\" --plot " + p +
            "plot.csv\" --observed-schedule " + p + "observed.json\"",
        "bootstrap --in " + p + "deals.csv\" --out " + p + "boot.json\" --reps 4 --seed 9 --costs " + p +
            "costs.json\" --kind linear" + grid + " --plot " + p + "boot_plot.csv\"",
        "report --config " + p + "report.cfg\"",
    };
    for (const auto& c : cmds) codes[run].push_back(run_cli(c));
    if (run == 0)
      for (const auto& c : cmds) commands.push_back(c.substr(0, c.find(' ')));
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root / "run0"))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root / "run0"));
  std::sort(files.begin(), files.end());
  int same = 0;
  std::string differing;
  for (const auto& f : files) {
    if (slurp(root / "run0" / f) == slurp(root / "run1" / f)) {
      ++same;
    } else {
      differing += " " + f.string();
    }
  }
  std::string failed_cmds;
  for (std::size_t k = 0; k < commands.size(); ++k)
    if (codes[0][k] != 0 || codes[1][k] != 0) failed_cmds += " " + commands[k];
  const bool ok = same == static_cast<int>(files.size()) && files.size() >= 15 && codes[0] == codes[1] &&
                  failed_cmds.empty();
  return {ok, fmt("%zu commands run twice; %d/%zu output files byte-identical%s%s", commands.size(), same,
                  files.size(), differing.empty() ? "" : (";" + std::string(" differ:") + differing).c_str(),
                  failed_cmds.empty() ? "" : ("; nonzero exit:" + failed_cmds).c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> all{
      {1, "concave schedules give all-or-nothing purchases", 5, concave_all_or_nothing},
      {2, "buyer solver equals brute force", 30, choice_oracle},
      {3, "two-rate schedule example", 0, two_rate_example},
      {4, "envelope profit vs Monte Carlo", 120, envelope_vs_monte_carlo},
      {5, "maximum-likelihood generate-and-recover", 300, mle_recovery},
      {6, "cost calibration", 0, cost_calibration},
      {7, "grid bisection vs exhaustive grids", 60, grid_bisection_checks},
      {8, "ordering chain on random markets", 0, ordering_chain},
      {9, "incentive-compatibility gap contrast", 0, ic_gap_contrast},
      {10, "fixed fees never hurt", 0, fixed_fee_dominance},
      {11, "experimental recovery of the size-value joint", 600, experiment_recovery},
      {12, "two-customer schedule shapes", 0, two_customer_shapes},
      {13, "CLI determinism", 0, cli_determinism},
  };
  std::vector<int> only;
  for (int a = 1; a < argc; ++a) only.push_back(std::atoi(argv[a]));
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.limit_s <= 0 || secs < c.limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::string timing = fmt("%.1f s", secs);
    if (c.limit_s > 0) timing += fmt(", limit %.0f s", c.limit_s);
    std::printf("criterion %2d %s | %s | %s | %s\n", c.id, pass ? "PASS" : "FAIL", c.title.c_str(),
                timing.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failures);
  return failures;
}
