// tariffkit command-line driver.
//
// Exit codes: 0 success, 1 failure, 2 missing input file (nothing written).

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tariffkit/tariffkit.hpp"

namespace fs = std::filesystem;
using namespace tariffkit;

namespace {

struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_inputs(const std::vector<std::string>& paths) {
  for (const auto& p : paths)
    if (!p.empty() && !fs::exists(p)) throw MissingInput("missing input file: " + p);
}

std::ofstream open_out(const std::string& path) {
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  return os;
}

void write_json(const std::string& path, const Json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

void warn(const std::vector<std::string>& ws) {
  for (const auto& w : ws) std::cerr << "warning: " << w << '\n';
}

IngestResult load_deals(const std::string& path, const std::vector<std::string>& covariates) {
  IngestResult r = covariates.empty() ? read_deals_csv(path) : read_deals_csv(path, covariates);
  warn(r.warnings);
  return r;
}

int latest_year(const std::vector<CustomerRecord>& recs) {
  int y = recs.front().year;
  for (const auto& r : recs) y = std::max(y, r.year);
  return y;
}

Market build_market(const std::vector<CustomerRecord>& records, const ValueModel& model,
                    const CostParams& costs, std::optional<int> year) {
  if (records.empty()) throw DomainError("no records");
  if (!year) year = latest_year(records);
  return Market(records, model, costs, SizeBinConfig{}, year);
}

struct SearchOptions {
  int points = 5;
  double zoom = 0.5;
  double eps = 1.0;
  double rate_upper = 5000.0;
  double fee_upper = 20000.0;
  std::uint64_t seed = 1;
  int mc_draws = 20000;

  void add(CLI::App* app) {
    app->add_option("--points", points, "grid points per dimension")->capture_default_str();
    app->add_option("--zoom", zoom, "grid zoom factor")->capture_default_str();
    app->add_option("--eps", eps, "stop width ($/unit)")->capture_default_str();
    app->add_option("--rate-upper", rate_upper, "upper bound on rates")->capture_default_str();
    app->add_option("--fee-upper", fee_upper, "upper bound on fixed fees")->capture_default_str();
    app->add_option("--mc-draws", mc_draws, "Monte Carlo draws per customer (smooth values)")
        ->capture_default_str();
  }

  OptimizeConfig config() const {
    OptimizeConfig c;
    c.grid.points_per_dim = points;
    c.grid.zoom = zoom;
    c.grid.stop_width = eps;
    c.rate_upper = rate_upper;
    c.fee_upper = fee_upper;
    c.profit.seed = seed;
    c.profit.draws = mc_draws;
    return c;
  }
};

Json report_json(const ProfitReport& r) {
  Json j = to_json(scenario_from("", r));
  j.erase("scheme");
  j["method"] = std::string(to_string(r.method));
  if (r.mc_std_error) j["mc_std_error"] = *r.mc_std_error;
  return j;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  int customers = 5000;
  std::uint64_t seed = 0;
  std::string out;
  std::string truth_out;
};

int cmd_simulate(const SimulateArgs& a) {
  auto s = reference_settings(a.customers);
  auto sm = generate_synthetic_market(s, a.seed);
  auto os = open_out(a.out);
  std::vector<std::string> names;
  for (const auto& c : s.covariates) names.push_back(c.name);
  write_deals_csv(os, sm.market.customers(), names);
  if (!a.truth_out.empty()) {
    Json j;
    j["format_version"] = kFormatVersion;
    j["value_model"] = to_json(s.truth);
    j["costs"] = {{"c1", s.costs.c1}, {"c2", s.costs.c2}};
    j["observed_schedule"] = to_json(s.observed_schedule);
    j["seed"] = a.seed;
    j["customers"] = a.customers;
    write_json(a.truth_out, j);
  }
  return 0;
}

struct IngestArgs {
  std::string in;
  std::string out;
  std::vector<std::string> covariates;
  std::string observed;
};

int cmd_ingest(const IngestArgs& a) {
  require_inputs({a.in, a.observed});
  auto r = load_deals(a.in, a.covariates);
  std::vector<CustomerRecord> recs = std::move(r.records);
  std::size_t dropped = 0;
  if (!a.observed.empty()) {
    const PriceSchedule obs = schedule_from_json(read_json_file(a.observed));
    auto f = filter_concavity_dips(recs, obs);
    warn(f.warnings);
    dropped = f.dropped;
    recs = attach_observed_prices(std::move(f.kept), obs);
  }
  auto os = open_out(a.out);
  write_deals_csv(os, recs, r.covariate_names);
  std::cerr << "ingested " << recs.size() << " records";
  if (dropped) std::cerr << " (" << dropped << " in concavity dips dropped)";
  std::cerr << '\n';
  return 0;
}

struct FitArgs {
  std::string in;
  std::string out;
  std::string family = "logistic";
  std::vector<std::string> covariates;
  int bootstrap = 0;
  std::uint64_t seed = 0;
};

EstimationConfig estimation_config(const FitArgs& a, const std::vector<std::string>& file_covariates) {
  EstimationConfig cfg;
  cfg.error_family = parse_error_family(a.family);
  cfg.covariate_names = a.covariates.empty() ? file_covariates : a.covariates;
  cfg.bootstrap_reps = a.bootstrap;
  cfg.seed = a.seed;
  return cfg;
}

int cmd_fit(const FitArgs& a) {
  require_inputs({a.in});
  auto r = load_deals(a.in, a.covariates);
  const EstimationConfig cfg = estimation_config(a, r.covariate_names);
  const FitResult fit = fit_mle(augment_zero_price(r.records), cfg);
  warn(fit.warnings);
  write_json(a.out, to_json(fit));
  return fit.converged ? 0 : 1;
}

struct CalibrateArgs {
  std::string in;
  std::string out;
  double setup = 1253.0;
  double snc_share = 0.65;
  double per_unit = 601.0;
};

int cmd_calibrate(const CalibrateArgs& a) {
  require_inputs({a.in});
  auto r = load_deals(a.in, {});
  const CostParams c = calibrate_costs(r.records, {a.setup, a.snc_share, a.per_unit});
  write_json(a.out, to_json(c));
  return 0;
}

struct MarketArgs {
  std::string in;
  std::string fit;
  std::string costs;
  std::optional<int> year;
  double smoothness = 1.0;

  void add(CLI::App* app) {
    app->add_option("--in", in, "deal CSV")->required();
    app->add_option("--fit", fit, "fit JSON")->required();
    app->add_option("--costs", costs, "costs JSON")->required();
    app->add_option("--year", year, "analysis year (default: latest in data)");
    app->add_option("--smoothness", smoothness, "value-function curvature alpha in (0,1]")
        ->capture_default_str();
  }

  Market load() const {
    require_inputs({in, fit, costs});
    ValueModel m = fit_model_from_json(read_json_file(fit));
    m.smoothness = smoothness;
    const CostParams c = costs_from_json(read_json_file(costs));
    auto r = load_deals(in, {});
    return build_market(r.records, m, c, year);
  }
};

struct OptimizeArgs {
  MarketArgs market;
  SearchOptions search;
  std::string kind = "via_origin";
  std::string out;
  std::string trace;
};

int cmd_optimize(const OptimizeArgs& a) {
  require_inputs({a.market.in, a.market.fit, a.market.costs});
  const Market m = a.market.load();
  OptimizeConfig cfg = a.search.config();
  const SearchKind kind = parse_search_kind(a.kind);
  if (kind != SearchKind::linear) {
    const auto lin = optimize_schedule(m, SearchKind::linear, cfg);
    cfg.seeds.push_back(lin.schedule);
  }
  const auto res = optimize_schedule(m, kind, cfg);
  Json j = to_json(res.schedule);
  j["search_kind"] = std::string(to_string(kind));
  j["profit"] = report_json(res.report);
  j["iterations"] = res.search.iterations;
  write_json(a.out, j);
  if (!a.trace.empty()) {
    auto os = open_out(a.trace);
    write_trace_csv(os, res.search);
  }
  return 0;
}

struct CounterfactualArgs {
  MarketArgs market;
  SearchOptions search;
  std::string out;
  std::string csv;
  std::string segments;
  std::string plot;
  std::string observed;
};

struct Suite {
  std::vector<ScenarioResult> scenarios;
  std::vector<PlotSeries> plots;
  Json chain;
};

Suite run_suite(const Market& m, const OptimizeConfig& base,
                const std::optional<PriceSchedule>& observed) {
  Suite s;
  ProfitOptions popt = base.profit;
  if (observed) {
    s.scenarios.push_back(scenario_from("current", expected_profit(m, *observed, popt)));
    s.plots.push_back({"current", *observed, {}});
  }
  const IcGap gap = ic_gap_analysis(m, base);
  OptimizeConfig seeded = base;
  seeded.seeds = {gap.linear_star, gap.p_star};
  const auto two = optimize_schedule(m, SearchKind::two_part, seeded);
  seeded.seeds.push_back(two.schedule);
  const auto vof = optimize_schedule(m, SearchKind::via_origin_fee, seeded);
  const auto third = third_degree_by_size(m, base);
  const ScenarioResult first = first_degree(m);

  s.scenarios.push_back(scenario_from("linear", expected_profit(m, gap.linear_star, popt)));
  s.scenarios.push_back(scenario_from("two_part", two.report));
  s.scenarios.push_back(scenario_from("individually_optimized", gap.tilde_report));
  s.scenarios.push_back(scenario_from("via_origin", gap.star_report));
  s.scenarios.push_back(scenario_from("via_origin_fee", vof.report));
  ScenarioResult t = third.scenario;
  t.label = "third_degree_size";
  s.scenarios.push_back(t);
  s.scenarios.push_back(first);
  s.plots.push_back({"linear", gap.linear_star, {}});
  s.plots.push_back({"individually_optimized", gap.p_tilde, {}});
  s.plots.push_back({"via_origin", gap.p_star, {}});

  const double chain[5] = {gap.pi_linear, gap.pi_tilde, gap.pi_star, gap.naive, first.profit};
  const char* names[5] = {"linear", "individually_optimized", "via_origin", "sum_local", "first_degree"};
  Json c;
  bool holds = true;
  Json slack = Json::array();
  for (int k = 0; k < 4; ++k) {
    const double d = chain[k + 1] - chain[k];
    slack.push_back({{"lower", names[k]}, {"upper", names[k + 1]}, {"slack", round_cents(d)}});
    if (d < -1e-6 * std::max(1.0, std::abs(gap.pi_star))) holds = false;
  }
  c["holds"] = holds;
  c["slack"] = slack;
  c["relative_ic_gap"] = gap.relative_gap;
  s.chain = c;
  return s;
}

int cmd_counterfactual(const CounterfactualArgs& a) {
  require_inputs({a.market.in, a.market.fit, a.market.costs, a.observed});
  const Market m = a.market.load();
  std::optional<PriceSchedule> observed;
  if (!a.observed.empty()) observed = schedule_from_json(read_json_file(a.observed));
  const Suite s = run_suite(m, a.search.config(), observed);
  Json j;
  j["format_version"] = kFormatVersion;
  j["scenarios"] = Json::array();
  for (const auto& r : s.scenarios) j["scenarios"].push_back(to_json(r));
  j["ordering_chain"] = s.chain;
  write_json(a.out, j);
  if (!a.csv.empty()) {
    auto os = open_out(a.csv);
    write_scenarios_csv(os, s.scenarios);
  }
  if (!a.segments.empty()) {
    auto os = open_out(a.segments);
    write_segments_csv(os, s.scenarios);
  }
  if (!a.plot.empty()) {
    auto os = open_out(a.plot);
    emit_plot_data(os, s.plots, m.bins().pricing_bins);
  }
  if (!s.chain["holds"].get<bool>()) std::cerr << "warning: ordering chain violated\n";
  return 0;
}

struct BootstrapArgs {
  FitArgs fit;
  std::string costs;
  std::string kind;
  std::string plot;
  std::optional<int> year;
  SearchOptions search;
};

int cmd_bootstrap(const BootstrapArgs& a) {
  require_inputs({a.fit.in, a.costs});
  if (a.fit.bootstrap < 1) throw ConfigError("--reps must be >= 1");
  auto r = load_deals(a.fit.in, a.fit.covariates);
  EstimationConfig cfg = estimation_config(a.fit, r.covariate_names);
  cfg.bootstrap_reps = 0;
  const FitResult point = fit_mle(augment_zero_price(r.records), cfg);

  std::optional<CostParams> costs;
  if (!a.costs.empty()) costs = costs_from_json(read_json_file(a.costs));
  const bool schedules = costs && !a.kind.empty();
  const SearchKind kind = schedules ? parse_search_kind(a.kind) : SearchKind::via_origin;
  const OptimizeConfig ocfg = a.search.config();
  const std::size_t n_params = point.parameters.size();

  Statistic stat = [&](const std::vector<CustomerRecord>& sample) {
    EstimationConfig c = cfg;
    c.restarts = 0;
    FitResult f = fit_mle(augment_zero_price(sample), c);
    if (!f.converged) return std::vector<double>{};
    std::vector<double> out = f.parameters;
    if (schedules) {
      const Market m = build_market(r.records, f.value_model, *costs, a.year);
      const auto res = optimize_schedule(m, kind, ocfg);
      out.insert(out.end(), res.schedule.rates.begin(), res.schedule.rates.end());
    }
    return out;
  };
  const BootstrapResult boot = bootstrap(r.records, a.fit.bootstrap, a.fit.seed, stat);

  Json j;
  j["format_version"] = kFormatVersion;
  j["replicates"] = boot.replicates.size();
  j["dropped"] = boot.dropped;
  j["parameters"] = Json::array();
  for (std::size_t k = 0; k < n_params && k < boot.standard_deviation.size(); ++k)
    j["parameters"].push_back({{"name", point.parameter_names[k]},
                               {"estimate", point.parameters[k]},
                               {"std_error", boot.standard_deviation[k]},
                               {"ci_lo", boot.lower[k]},
                               {"ci_hi", boot.upper[k]}});
  if (schedules && boot.standard_deviation.size() > n_params) {
    const Market m = build_market(r.records, point.value_model, *costs, a.year);
    const auto res = optimize_schedule(m, kind, ocfg);
    Json sched = to_json(res.schedule);
    std::vector<std::pair<double, double>> ci;
    for (std::size_t k = n_params; k < boot.lower.size(); ++k) ci.emplace_back(boot.lower[k], boot.upper[k]);
    sched["rate_ci"] = ci;
    j["schedule"] = sched;
    if (!a.plot.empty()) {
      const Bins& bins = m.bins().pricing_bins;
      // one rate covers every bin
      std::vector<std::pair<double, double>> per_bin = ci;
      if (ci.size() == 1) per_bin.assign(bins.size(), ci[0]);
      if (per_bin.size() == bins.size()) {
        auto os = open_out(a.plot);
        emit_plot_data(os, {{std::string(to_string(kind)), res.schedule, per_bin}}, bins);
      } else {
        std::cerr << "warning: rate intervals do not map onto pricing bins; no plot written\n";
      }
    }
  }
  write_json(a.fit.out, j);
  return 0;
}

// ---------------------------------------------------------------------------
// report: configured pipeline

int cmd_report(const std::string& config_path) {
  require_inputs({config_path});
  std::ifstream in(config_path);
  auto kv = parse_kv_config(in);
  auto get = [&](const std::string& k, const std::string& def = "") {
    auto it = kv.find(k);
    return it == kv.end() ? def : it->second;
  };
  const fs::path base = fs::path(config_path).parent_path();
  auto resolve = [&](const std::string& p) { return p.empty() || fs::path(p).is_absolute() ? p : (base / p).string(); };

  const std::string input = resolve(get("input"));
  const std::string observed = resolve(get("observed_schedule"));
  const std::string seed_str = get("seed");
  if (seed_str.empty()) throw ConfigError("config: seed is mandatory");
  if (input.empty() && get("simulate_customers").empty())
    throw ConfigError("config: set input or simulate_customers");
  require_inputs({input, observed});
  const std::string out_dir = resolve(get("out_dir", "report"));
  const std::uint64_t seed = std::stoull(seed_str);
  std::vector<std::string> stages = split_list(get("stages", "fit,calibrate,optimize,counterfactual"));

  fs::create_directories(out_dir);
  std::vector<std::string> done;
  auto manifest = [&](const std::string& status) {
    std::ofstream os(fs::path(out_dir) / "MANIFEST", std::ios::binary);
    os << "format_version=" << kFormatVersion << '\n' << "status=" << status << '\n';
    for (const auto& s : done) os << "completed=" << s << '\n';
  };

  std::string current = "setup";
  try {
    std::vector<CustomerRecord> records;
    std::vector<std::string> covariates = split_list(get("covariates"));
    if (!input.empty()) {
      auto r = load_deals(input, covariates);
      records = std::move(r.records);
      if (covariates.empty()) covariates = r.covariate_names;
    } else {
      current = "simulate";
      SimulateArgs sa{std::stoi(get("simulate_customers")), seed, (fs::path(out_dir) / "deals.csv").string(), (fs::path(out_dir) / "truth.json").string()};
      cmd_simulate(sa);
      auto r = load_deals(sa.out, {});
      records = std::move(r.records);
      covariates = r.covariate_names;
      done.push_back("simulate");
    }
    SearchOptions so;
    so.seed = seed;
    if (!get("grid_points").empty()) so.points = std::stoi(get("grid_points"));
    if (!get("grid_zoom").empty()) so.zoom = std::stod(get("grid_zoom"));
    if (!get("grid_eps").empty()) so.eps = std::stod(get("grid_eps"));
    if (!get("rate_upper").empty()) so.rate_upper = std::stod(get("rate_upper"));
    if (!get("fee_upper").empty()) so.fee_upper = std::stod(get("fee_upper"));
    std::optional<int> year;
    if (!get("year").empty()) year = std::stoi(get("year"));
    std::optional<PriceSchedule> obs;
    if (!observed.empty()) obs = schedule_from_json(read_json_file(observed));

    std::optional<FitResult> fit;
    std::optional<CostParams> costs;
    for (const auto& stage : stages) {
      current = stage;
      if (stage == "fit") {
        EstimationConfig cfg;
        cfg.error_family = parse_error_family(get("family", "logistic"));
        cfg.covariate_names = covariates;
        cfg.seed = seed;
        cfg.bootstrap_reps = get("bootstrap_reps").empty() ? 0 : std::stoi(get("bootstrap_reps"));
        fit = fit_mle(augment_zero_price(records), cfg);
        warn(fit->warnings);
        write_json((fs::path(out_dir) / "fit.json").string(), to_json(*fit));
      } else if (stage == "calibrate") {
        costs = calibrate_costs(records);
        write_json((fs::path(out_dir) / "costs.json").string(), to_json(*costs));
      } else if (stage == "optimize" || stage == "counterfactual") {
        if (!fit || !costs) throw ConfigError(stage + " needs the fit and calibrate stages first");
        const Market m = build_market(records, fit->value_model, *costs, year);
        if (stage == "optimize") {
          OptimizeConfig cfg = so.config();
          const SearchKind kind = parse_search_kind(get("kind", "via_origin"));
          if (kind != SearchKind::linear)
            cfg.seeds.push_back(optimize_schedule(m, SearchKind::linear, cfg).schedule);
          const auto res = optimize_schedule(m, kind, cfg);
          Json j = to_json(res.schedule);
          j["search_kind"] = std::string(to_string(kind));
          j["profit"] = report_json(res.report);
          j["iterations"] = res.search.iterations;
          write_json((fs::path(out_dir) / "schedule.json").string(), j);
          auto os = open_out((fs::path(out_dir) / "trace.csv").string());
          write_trace_csv(os, res.search);
        } else {
          const Suite s = run_suite(m, so.config(), obs);
          Json j;
          j["format_version"] = kFormatVersion;
          j["scenarios"] = Json::array();
          for (const auto& r : s.scenarios) j["scenarios"].push_back(to_json(r));
          j["ordering_chain"] = s.chain;
          write_json((fs::path(out_dir) / "scenarios.json").string(), j);
          auto a = open_out((fs::path(out_dir) / "scenarios.csv").string());
          write_scenarios_csv(a, s.scenarios);
          auto b = open_out((fs::path(out_dir) / "segments.csv").string());
          write_segments_csv(b, s.scenarios);
          auto c = open_out((fs::path(out_dir) / "plot_marginal_prices.csv").string());
          emit_plot_data(c, s.plots, m.bins().pricing_bins);
          if (!s.chain["holds"].get<bool>()) std::cerr << "warning: ordering chain violated\n";
        }
      } else {
        throw ConfigError("unknown stage: " + stage);
      }
      done.push_back(stage);
    }
  } catch (const std::exception& e) {
    manifest("failed at " + current + ": " + e.what());
    throw;
  }
  manifest("complete");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear tariff estimation and optimization"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "write a synthetic deal CSV");
  c_sim->add_option("--customers", sim.customers)->capture_default_str();
  c_sim->add_option("--seed", sim.seed)->required();
  c_sim->add_option("--out", sim.out)->required();
  c_sim->add_option("--truth-out", sim.truth_out, "ground-truth JSON");

  IngestArgs ing;
  auto* c_ing = app.add_subcommand("ingest", "validate and normalize a deal CSV");
  c_ing->add_option("--in", ing.in)->required();
  c_ing->add_option("--out", ing.out)->required();
  c_ing->add_option("--covariates", ing.covariates)->delimiter(',');
  c_ing->add_option("--observed-schedule", ing.observed,
                    "schedule JSON: drop concavity dips and attach observed unit prices");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "maximum-likelihood fit of the value model");
  c_fit->add_option("--in", fit.in)->required();
  c_fit->add_option("--out", fit.out)->required();
  c_fit->add_option("--family", fit.family)->check(CLI::IsMember({"logistic", "normal"}))->capture_default_str();
  c_fit->add_option("--covariates", fit.covariates)->delimiter(',');
  c_fit->add_option("--bootstrap", fit.bootstrap, "bootstrap replicates for standard errors");
  c_fit->add_option("--seed", fit.seed)->required();

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate", "calibrate c1, c2 from SNC values");
  c_cal->add_option("--in", cal.in)->required();
  c_cal->add_option("--out", cal.out)->required();
  c_cal->add_option("--setup", cal.setup)->capture_default_str();
  c_cal->add_option("--snc-share", cal.snc_share)->capture_default_str();
  c_cal->add_option("--per-unit", cal.per_unit)->capture_default_str();

  OptimizeArgs opt;
  auto* c_opt = app.add_subcommand("optimize", "optimal schedule by grid bisection");
  opt.market.add(c_opt);
  opt.search.add(c_opt);
  c_opt->add_option("--seed", opt.search.seed)->required();
  c_opt->add_option("--kind", opt.kind)
      ->check(CLI::IsMember({"linear", "via_origin", "continuous", "two_part", "via_origin_fee"}))
      ->capture_default_str();
  c_opt->add_option("--out", opt.out)->required();
  c_opt->add_option("--trace", opt.trace, "optimizer trace CSV");

  CounterfactualArgs cf;
  auto* c_cf = app.add_subcommand("counterfactual", "profit and welfare across pricing schemes");
  cf.market.add(c_cf);
  cf.search.add(c_cf);
  c_cf->add_option("--seed", cf.search.seed)->required();
  c_cf->add_option("--out", cf.out)->required();
  c_cf->add_option("--csv", cf.csv, "scheme table CSV");
  c_cf->add_option("--segments", cf.segments, "per-group table CSV");
  c_cf->add_option("--plot", cf.plot, "marginal-price plot data CSV");
  c_cf->add_option("--observed-schedule", cf.observed, "schedule JSON evaluated as 'current'");

  BootstrapArgs bs;
  auto* c_bs = app.add_subcommand("bootstrap", "bootstrap parameters and optionally schedules");
  c_bs->add_option("--in", bs.fit.in)->required();
  c_bs->add_option("--out", bs.fit.out)->required();
  c_bs->add_option("--reps", bs.fit.bootstrap)->required();
  c_bs->add_option("--seed", bs.fit.seed)->required();
  c_bs->add_option("--family", bs.fit.family)->check(CLI::IsMember({"logistic", "normal"}))->capture_default_str();
  c_bs->add_option("--covariates", bs.fit.covariates)->delimiter(',');
  c_bs->add_option("--costs", bs.costs, "costs JSON; with --kind, re-optimizes per replicate");
  c_bs->add_option("--kind", bs.kind)
      ->check(CLI::IsMember({"linear", "via_origin", "continuous", "two_part", "via_origin_fee"}));
  c_bs->add_option("--year", bs.year);
  c_bs->add_option("--plot", bs.plot, "plot data CSV with rate intervals");
  bs.search.add(c_bs);

  std::string report_cfg;
  auto* c_rep = app.add_subcommand("report", "run a configured pipeline");
  c_rep->add_option("--config", report_cfg)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c_sim) return cmd_simulate(sim);
    if (*c_ing) return cmd_ingest(ing);
    if (*c_fit) return cmd_fit(fit);
    if (*c_cal) return cmd_calibrate(cal);
    if (*c_opt) return cmd_optimize(opt);
    if (*c_cf) return cmd_counterfactual(cf);
    if (*c_bs) {
      bs.search.seed = bs.fit.seed;
      return cmd_bootstrap(bs);
    }
    if (*c_rep) return cmd_report(report_cfg);
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
