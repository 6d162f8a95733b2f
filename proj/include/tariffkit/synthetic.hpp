#pragma once

// Seeded synthetic market generator. Stands in for proprietary deal data in
// every verification path: it exposes the latent per-unit values alongside
// the observable records so that oracles can compare against ground truth.

#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "tariffkit/choice.hpp"
#include "tariffkit/distributions.hpp"
#include "tariffkit/errors.hpp"
#include "tariffkit/market_model.hpp"
#include "tariffkit/tariff.hpp"

namespace tariffkit {

struct CovariateDistribution {
  enum class Kind { constant, bernoulli, normal, uniform, categorical };

  std::string name;
  Kind kind = Kind::constant;
  double a = 0.0;  // constant value / bernoulli p / normal mean / uniform low
  double b = 0.0;  // normal sd / uniform high
  std::vector<double> values;
  std::vector<double> weights;

  static CovariateDistribution constant(std::string n, double v) {
    return {std::move(n), Kind::constant, v, 0.0, {}, {}};
  }
  static CovariateDistribution bernoulli(std::string n, double p) {
    return {std::move(n), Kind::bernoulli, p, 0.0, {}, {}};
  }
  static CovariateDistribution normal(std::string n, double mean, double sd) {
    return {std::move(n), Kind::normal, mean, sd, {}, {}};
  }
  static CovariateDistribution uniform(std::string n, double lo, double hi) {
    return {std::move(n), Kind::uniform, lo, hi, {}, {}};
  }
  static CovariateDistribution categorical(std::string n, std::vector<double> v,
                                           std::vector<double> w) {
    return {std::move(n), Kind::categorical, 0.0, 0.0, std::move(v), std::move(w)};
  }

  template <typename Rng>
  double draw(Rng& rng) const {
    switch (kind) {
      case Kind::constant: return a;
      case Kind::bernoulli: return std::bernoulli_distribution(a)(rng) ? 1.0 : 0.0;
      case Kind::normal: return std::normal_distribution<double>(a, b)(rng);
      case Kind::uniform: return std::uniform_real_distribution<double>(a, b)(rng);
      case Kind::categorical: {
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        return values.at(pick(rng));
      }
    }
    return 0.0;
  }
};

struct GeneratorSettings {
  int customers = 1000;
  std::vector<CovariateDistribution> covariates;
  std::vector<int> years{2020, 2021};
  std::vector<double> year_weights{0.5, 0.5};
  std::vector<int> size_values;
  std::vector<double> size_weights;
  std::vector<double> snc_values{1868.0, 4670.0, 9340.0};
  std::vector<double> snc_weights{0.5, 0.35, 0.15};
  ValueModel truth;
  CostParams costs;
  SizeBinConfig bins;
  // Schedule the synthetic customers faced; drives success flags and unit prices.
  PriceSchedule observed_schedule = PriceSchedule::linear(0.0);
};

struct SyntheticMarket {
  Market market;
  std::vector<double> latent_values;  // oracle access only
};

inline std::string customer_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%07zu", i + 1);
  return buf;
}

inline SyntheticMarket generate_synthetic_market(const GeneratorSettings& s,
                                                 std::uint64_t seed) {
  if (s.customers <= 0) throw DomainError("customer count must be positive");
  if (s.size_values.empty() || s.size_values.size() != s.size_weights.size())
    throw ConfigError("size distribution needs matching values and weights");
  if (s.years.empty() || s.years.size() != s.year_weights.size())
    throw ConfigError("year distribution needs matching values and weights");
  if (s.snc_values.size() != s.snc_weights.size())
    throw ConfigError("snc distribution needs matching values and weights");
  for (int q : s.size_values)
    if (q < 1) throw DomainError("generated sizes must be >= 1");
  validate(s.truth, /*allow_zero_sigma=*/true);

  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick_year(s.year_weights.begin(), s.year_weights.end());
  std::discrete_distribution<std::size_t> pick_size(s.size_weights.begin(), s.size_weights.end());
  std::discrete_distribution<std::size_t> pick_snc(s.snc_weights.begin(), s.snc_weights.end());

  std::vector<CustomerRecord> records;
  std::vector<double> latent;
  records.reserve(static_cast<std::size_t>(s.customers));
  latent.reserve(static_cast<std::size_t>(s.customers));
  for (int i = 0; i < s.customers; ++i) {
    CustomerRecord c;
    c.id = customer_id(static_cast<std::size_t>(i));
    for (const auto& cov : s.covariates) c.covariates[cov.name] = cov.draw(rng);
    c.year = s.years[pick_year(rng)];
    c.size = s.size_values[pick_size(rng)];
    c.snc_value = s.snc_values.empty() ? 0.0 : s.snc_values[pick_snc(rng)];
    const double mu = mean_value(s.truth, c);
    const double eps = dist::draw(s.truth.error_family, rng);
    const double v = mu + s.truth.sigma * eps;
    c.observed_unit_price = average_price(s.observed_schedule, c.size);
    c.success = solve_purchase(v, c.size, s.observed_schedule, s.truth.smoothness).bought;
    records.push_back(std::move(c));
    latent.push_back(v);
  }
  ValueModel model = s.truth;
  if (!(model.sigma > 0.0)) model.sigma = 0.0;
  return {Market(std::move(records), std::move(model), s.costs, s.bins), std::move(latent)};
}

/// Ground-truth demand used throughout the test suites: coefficients follow
/// the published logistic fit for the workshop market; covariate and size
/// distributions are chosen to be well balanced.
inline ValueModel reference_value_model() {
  ValueModel m;
  m.beta = {{kInterceptName, 2260.56},      {"log_feature1", 133.79},
            {"feature2", 686.64},           {"computer_software", 39.18},
            {"marketing_advertising", -224.29}, {"log_firm_age", -40.99}};
  m.year_effects = {{2020, 0.0}, {2021, 70.2}};
  m.estimation_bins = Bins{{1, 20, 50}};
  m.size_effects = {0.0, -657.40, -835.73};
  m.sigma = 385.44;
  m.error_family = ErrorFamily::logistic;
  return m;
}

inline GeneratorSettings reference_settings(int customers) {
  GeneratorSettings s;
  s.customers = customers;
  // Wide, roughly orthogonal covariates keep every coefficient informative;
  // the mean value sits far above zero so zero-price refusals are negligible.
  s.covariates = {
      CovariateDistribution::uniform("log_feature1", 12.0, 28.0),
      CovariateDistribution::bernoulli("feature2", 0.5),
      CovariateDistribution::bernoulli("computer_software", 0.5),
      CovariateDistribution::bernoulli("marketing_advertising", 0.5),
      CovariateDistribution::uniform("log_firm_age", 0.0, 3.0),
  };
  s.size_values = {1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 18, 20, 25, 30, 40, 50, 60, 80, 100, 120, 150};
  s.size_weights = {6, 8, 8, 7, 7, 5, 6, 7, 5, 5, 3, 5, 4, 4, 3, 3, 2, 2, 2, 1.5, 1};
  s.truth = reference_value_model();
  s.costs = {3630.0, 760.0};
  // Concave continuous tariff: purchase happens iff v clears the average price.
  // Steep early rates spread average prices within each estimation bin.
  s.observed_schedule =
      PriceSchedule::continuous(s.bins.pricing_bins, {5500.0, 3800.0, 2900.0, 2900.0, 2900.0});
  return s;
}

}  // namespace tariffkit
