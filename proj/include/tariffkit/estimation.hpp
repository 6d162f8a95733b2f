#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tariffkit/distributions.hpp"
#include "tariffkit/errors.hpp"
#include "tariffkit/market_model.hpp"
#include "tariffkit/parallel.hpp"
#include "tariffkit/tariff.hpp"

namespace tariffkit {

struct EstimationConfig {
  ErrorFamily error_family = ErrorFamily::logistic;
  SizeBinConfig bins;
  std::vector<std::string> covariate_names;  // the intercept is always included
  double optimizer_tolerance = 1e-12;
  double sigma_floor = 1e-6;
  int bootstrap_reps = 0;
  std::uint64_t seed = 0;
  int restarts = 4;
  int max_iterations = 200;
};

inline void validate(const EstimationConfig& c) {
  if (c.bootstrap_reps < 0) throw ConfigError("bootstrap_reps must be >= 0");
  if (!(c.sigma_floor > 0.0)) throw ConfigError("sigma_floor must be positive");
  if (!(c.optimizer_tolerance > 0.0)) throw ConfigError("optimizer_tolerance must be positive");
}

struct FitResult {
  ValueModel value_model;
  double neg_log_likelihood = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> parameter_names;
  std::vector<double> parameters;
  std::vector<double> standard_errors;  // bootstrap; empty when no replicates ran
  bool converged = false;
  bool separated = false;
  bool sigma_at_floor = false;
  int iterations = 0;
  double gradient_norm = std::numeric_limits<double>::infinity();
  std::map<int, double> size_pmf;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------
// Data preparation

inline std::map<int, double> empirical_size_distribution(const std::vector<CustomerRecord>& records) {
  if (records.empty()) throw DomainError("size distribution needs at least one record");
  std::map<int, std::size_t> counts;
  for (const auto& r : records) ++counts[r.size];
  std::map<int, double> pmf;
  const double n = static_cast<double>(records.size());
  for (const auto& [q, c] : counts) pmf[q] = static_cast<double>(c) / n;
  return pmf;
}

struct FilterResult {
  std::vector<CustomerRecord> kept;
  std::size_t dropped = 0;
  std::vector<std::string> warnings;
};

/// Drops records whose size sits in a dip of the observed schedule, where the
/// buyer could have paid less for more and so the size is not its true need.
inline FilterResult filter_concavity_dips(const std::vector<CustomerRecord>& records,
                                          const PriceSchedule& observed) {
  int q_max = kDefaultMaxQuantity;
  for (const auto& r : records) q_max = std::max(q_max, r.size);
  const auto report = is_concave_increasing(observed, q_max);
  const std::set<int> dips(report.dip_quantities.begin(), report.dip_quantities.end());
  FilterResult out;
  for (const auto& r : records) {
    if (dips.count(r.size)) {
      ++out.dropped;
    } else {
      out.kept.push_back(r);
    }
  }
  if (out.kept.empty() && !records.empty())
    out.warnings.push_back("every record lies in a concavity dip; result is empty");
  return out;
}

inline bool is_zero_price_augmented(const std::vector<CustomerRecord>& records) {
  if (records.empty() || records.size() % 2 != 0) return false;
  const std::size_t half = records.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    CustomerRecord expect = records[i];
    expect.observed_unit_price = 0.0;
    expect.success = true;
    if (!(records[half + i] == expect)) return false;
  }
  return true;
}

/// Appends a copy of every record with price 0 and success 1: the moment that
/// (almost) every potential customer buys when the product is free.
inline std::vector<CustomerRecord> augment_zero_price(const std::vector<CustomerRecord>& records) {
  if (is_zero_price_augmented(records))
    throw ConfigError("records are already zero-price augmented");
  std::vector<CustomerRecord> out = records;
  out.reserve(records.size() * 2);
  for (const auto& r : records) {
    CustomerRecord c = r;
    c.observed_unit_price = 0.0;
    c.success = true;
    out.push_back(std::move(c));
  }
  return out;
}

/// Per-unit price the customer faced for its size: the average price P(q)/q,
/// which is the flat rate for a fee-free via-origin schedule.
inline std::vector<CustomerRecord> attach_observed_prices(std::vector<CustomerRecord> records,
                                                          const PriceSchedule& observed) {
  for (auto& r : records) r.observed_unit_price = average_price(observed, r.size);
  return records;
}

inline double success_probability(const ValueModel& m, const CustomerRecord& c) {
  if (!(m.sigma > 0.0)) throw DomainError("sigma must be positive");
  const double mu = mean_value(m, c);
  return dist::survival(m.error_family, (c.observed_unit_price - mu) / m.sigma);
}

// ---------------------------------------------------------------------------
// Cost calibration

struct CostCalibration {
  double setup_cost = 1253.0;
  double snc_fixed_share = 0.65;
  double per_unit_cost = 601.0;
};

inline CostParams calibrate_costs(const std::vector<CustomerRecord>& records,
                                  const CostCalibration& cal = {}) {
  double snc = 0.0, units = 0.0, deals = 0.0;
  for (const auto& r : records) {
    if (!r.success) continue;
    snc += r.snc_value;
    units += r.size;
    deals += 1.0;
  }
  if (deals == 0.0) throw DomainError("cost calibration needs at least one successful deal");
  return {cal.setup_cost + cal.snc_fixed_share * snc / deals,
          cal.per_unit_cost + (1.0 - cal.snc_fixed_share) * snc / units};
}

// ---------------------------------------------------------------------------
// Likelihood

/// Binary-choice likelihood of deal success given the faced per-unit price.
/// Works internally in the precision parameterization theta = (beta/sigma,
/// 1/sigma), where the log-likelihood is globally concave for both families.
class MleProblem {
 public:
  MleProblem(const std::vector<CustomerRecord>& records, const EstimationConfig& config)
      : family_(config.error_family), bins_(config.bins.estimation_bins) {
    if (records.empty()) throw DomainError("likelihood needs at least one record");
    names_.push_back(kInterceptName);
    for (const auto& n : config.covariate_names) names_.push_back(n);
    std::set<int> years;
    for (const auto& r : records) years.insert(r.year);
    years_.assign(years.begin(), years.end());
    for (std::size_t t = 1; t < years_.size(); ++t)
      names_.push_back("year_" + std::to_string(years_[t]));
    for (std::size_t k = 1; k < bins_.size(); ++k)
      names_.push_back("size_bin_" + std::to_string(bins_.start(k)));
    names_.push_back("sigma");

    const std::size_t p = names_.size();
    design_.resize(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(p));
    design_.setZero();
    sign_.resize(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      const auto row = static_cast<Eigen::Index>(i);
      design_(row, 0) = 1.0;
      for (std::size_t j = 0; j < config.covariate_names.size(); ++j) {
        auto it = r.covariates.find(config.covariate_names[j]);
        if (it == r.covariates.end())
          throw ConfigError("record " + r.id + " is missing covariate '" +
                            config.covariate_names[j] + "'");
        design_(row, static_cast<Eigen::Index>(1 + j)) = it->second;
      }
      std::size_t col = 1 + config.covariate_names.size();
      const auto yt = std::lower_bound(years_.begin(), years_.end(), r.year) - years_.begin();
      if (yt > 0) design_(row, static_cast<Eigen::Index>(col + yt - 1)) = 1.0;
      col += years_.size() - 1;
      const auto k = bins_.find(r.size);
      if (!k) throw ConfigError("record " + r.id + " size maps to no estimation bin");
      if (*k > 0) design_(row, static_cast<Eigen::Index>(col + *k - 1)) = 1.0;
      design_(row, static_cast<Eigen::Index>(p - 1)) = -r.observed_unit_price;
      sign_(row) = r.success ? 1.0 : -1.0;
    }
    scale_.resize(static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j) {
      const double rms = std::sqrt(design_.col(j).squaredNorm() / design_.rows());
      scale_(j) = rms > 0.0 ? rms : 1.0;
    }
  }

  std::size_t dim() const { return names_.size(); }
  std::size_t observations() const { return static_cast<std::size_t>(design_.rows()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<int>& years() const { return years_; }
  ErrorFamily family() const { return family_; }

  // theta (precision form) <-> natural parameters (beta..., sigma)
  Eigen::VectorXd to_theta(const std::vector<double>& params) const {
    const auto p = static_cast<Eigen::Index>(dim());
    Eigen::VectorXd th(p);
    const double sigma = params.back();
    for (Eigen::Index j = 0; j + 1 < p; ++j) th(j) = params[static_cast<std::size_t>(j)] / sigma;
    th(p - 1) = 1.0 / sigma;
    return th;
  }
  std::vector<double> to_params(const Eigen::VectorXd& th) const {
    const auto p = th.size();
    std::vector<double> out(static_cast<std::size_t>(p));
    const double sigma = 1.0 / th(p - 1);
    for (Eigen::Index j = 0; j + 1 < p; ++j) out[static_cast<std::size_t>(j)] = th(j) * sigma;
    out.back() = sigma;
    return out;
  }

  double log_likelihood_theta(const Eigen::VectorXd& th) const {
    const Eigen::VectorXd idx = design_ * th;
    long double acc = 0.0L;
    for (Eigen::Index i = 0; i < idx.size(); ++i)
      acc += dist::log_cdf(family_, sign_(i) * idx(i));
    return static_cast<double>(acc);
  }

  double log_likelihood(const std::vector<double>& params) const {
    return log_likelihood_theta(to_theta(params));
  }

  // Gradient and (negated) Hessian with respect to theta.
  void derivatives(const Eigen::VectorXd& th, Eigen::VectorXd& grad, Eigen::MatrixXd& neg_hess,
                   bool want_hessian = true) const {
    const Eigen::VectorXd idx = design_ * th;
    Eigen::VectorXd coef(idx.size()), weight(idx.size());
    for (Eigen::Index i = 0; i < idx.size(); ++i) {
      const double t = sign_(i) * idx(i);
      const double lambda = dist::mills_lower(family_, t);
      coef(i) = sign_(i) * lambda;
      if (family_ == ErrorFamily::logistic) {
        weight(i) = dist::cdf(family_, t) * dist::survival(family_, t);
      } else {
        weight(i) = lambda * (lambda + t);
      }
    }
    grad = design_.transpose() * coef;
    if (want_hessian) neg_hess = design_.transpose() * weight.asDiagonal() * design_;
  }

  /// Analytic gradient with respect to the natural parameters (beta..., sigma).
  std::vector<double> gradient(const std::vector<double>& params) const {
    const Eigen::VectorXd th = to_theta(params);
    Eigen::VectorXd g;
    Eigen::MatrixXd unused;
    derivatives(th, g, unused, false);
    const double sigma = params.back();
    const auto p = g.size();
    std::vector<double> out(static_cast<std::size_t>(p));
    double dsigma = -g(p - 1) / (sigma * sigma);
    for (Eigen::Index j = 0; j + 1 < p; ++j) {
      out[static_cast<std::size_t>(j)] = g(j) / sigma;
      dsigma -= g(j) * params[static_cast<std::size_t>(j)] / (sigma * sigma);
    }
    out.back() = dsigma;
    return out;
  }

  const Eigen::VectorXd& scale() const { return scale_; }

  // Smallest probability the model assigns to an observed outcome.
  double min_outcome_probability(const Eigen::VectorXd& th) const {
    const Eigen::VectorXd idx = design_ * th;
    double m = 1.0;
    for (Eigen::Index i = 0; i < idx.size(); ++i)
      m = std::min(m, dist::cdf(family_, sign_(i) * idx(i)));
    return m;
  }

  ValueModel to_model(const std::vector<double>& params, const Bins& estimation_bins) const {
    ValueModel m;
    const std::size_t n_beta = names_.size() - (years_.size() - 1) - (bins_.size() - 1) - 1;
    for (std::size_t b = 0; b < n_beta; ++b) m.beta[names_[b]] = params[b];
    m.year_effects[years_.front()] = 0.0;
    for (std::size_t t = 1; t < years_.size(); ++t) m.year_effects[years_[t]] = params[n_beta + t - 1];
    m.estimation_bins = estimation_bins;
    m.size_effects.assign(bins_.size(), 0.0);
    for (std::size_t k = 1; k < bins_.size(); ++k)
      m.size_effects[k] = params[n_beta + years_.size() - 1 + k - 1];
    m.sigma = params.back();
    m.error_family = family_;
    return m;
  }

 private:
  ErrorFamily family_;
  Bins bins_;
  std::vector<std::string> names_;
  std::vector<int> years_;
  Eigen::MatrixXd design_;
  Eigen::VectorXd sign_;
  Eigen::VectorXd scale_;
};

namespace detail {

struct NewtonOutcome {
  Eigen::VectorXd theta;
  double loglik = -std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  bool at_floor = false;
};

// Damped Newton ascent in column-scaled precision coordinates with the
// bound 1/theta_last >= sigma_floor enforced by fixing the coordinate.
inline NewtonOutcome newton_ascent(const MleProblem& prob, Eigen::VectorXd theta,
                                   const EstimationConfig& cfg) {
  const auto p = static_cast<Eigen::Index>(prob.dim());
  const double tau_max = 1.0 / cfg.sigma_floor;
  const Eigen::VectorXd& scale = prob.scale();
  const double n = static_cast<double>(prob.observations());
  NewtonOutcome out;
  bool fixed_tau = false;
  if (theta(p - 1) >= tau_max) {
    theta(p - 1) = tau_max;
    fixed_tau = true;
  }
  double ll = prob.log_likelihood_theta(theta);
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    prob.derivatives(theta, g, h);
    // Scaled coordinates u = theta .* scale: grad_u = g ./ scale.
    Eigen::VectorXd gu = g.cwiseQuotient(scale) / n;
    Eigen::MatrixXd hu = (scale.asDiagonal().inverse() * h * scale.asDiagonal().inverse()) / n;
    if (fixed_tau && gu(p - 1) < 0.0) fixed_tau = false;  // interior pull releases the bound
    const Eigen::Index free = fixed_tau ? p - 1 : p;
    const double gnorm = gu.head(free).cwiseAbs().maxCoeff();
    out.iterations = it;
    out.grad_norm = gnorm;
    if (gnorm < cfg.optimizer_tolerance) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd hf = hu.topLeftCorner(free, free);
    const double ridge = 1e-14 * std::max(1.0, hf.diagonal().maxCoeff());
    hf.diagonal().array() += ridge;
    Eigen::VectorXd step = Eigen::VectorXd::Zero(p);
    step.head(free) = hf.ldlt().solve(gu.head(free));
    if (!step.allFinite()) step.head(free) = gu.head(free);
    Eigen::VectorXd dir = step.cwiseQuotient(scale);

    double t = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      Eigen::VectorXd cand = theta + t * dir;
      if (!(cand(p - 1) > 0.0)) continue;
      bool hit = false;
      if (cand(p - 1) > tau_max) {
        cand(p - 1) = tau_max;
        hit = true;
      }
      const double cll = prob.log_likelihood_theta(cand);
      if (std::isfinite(cll) && cll >= ll) {
        improved = cll > ll || (cand - theta).norm() == 0.0;
        theta = cand;
        ll = cll;
        if (hit) fixed_tau = true;
        break;
      }
    }
    if (!improved) {
      // No ascent possible at machine precision; report the gradient as is.
      out.iterations = it + 1;
      break;
    }
    out.iterations = it + 1;
  }
  if (!out.converged) {
    prob.derivatives(theta, g, h, false);
    Eigen::VectorXd gu = g.cwiseQuotient(scale) / n;
    const Eigen::Index free = fixed_tau ? p - 1 : p;
    out.grad_norm = gu.head(free).cwiseAbs().maxCoeff();
    out.converged = out.grad_norm < cfg.optimizer_tolerance;
  }
  out.theta = theta;
  out.loglik = ll;
  out.at_floor = fixed_tau;
  return out;
}

inline double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// Linear interpolation between order statistics.
inline double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace detail

struct BootstrapResult {
  std::vector<double> standard_deviation;
  std::vector<double> lower;  // 2.5th percentile
  std::vector<double> upper;  // 97.5th percentile
  std::vector<std::vector<double>> replicates;
  int dropped = 0;
};

using Statistic = std::function<std::vector<double>(const std::vector<CustomerRecord>&)>;

/// Nonparametric bootstrap over record rows. Replicate r draws from a stream
/// seeded by (seed, r), so results do not depend on scheduling.
inline BootstrapResult bootstrap(const std::vector<CustomerRecord>& records, int reps,
                                 std::uint64_t seed, const Statistic& statistic) {
  if (reps < 0) throw ConfigError("bootstrap reps must be >= 0");
  BootstrapResult out;
  if (reps == 0 || records.empty()) return out;
  std::vector<std::vector<double>> draws(static_cast<std::size_t>(reps));
  std::vector<char> ok(static_cast<std::size_t>(reps), 0);
  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick(0, records.size() - 1);
    std::vector<CustomerRecord> sample;
    sample.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) sample.push_back(records[pick(rng)]);
    try {
      auto stat = statistic(sample);
      const bool finite = std::all_of(stat.begin(), stat.end(), [](double x) { return std::isfinite(x); });
      if (!stat.empty() && finite) {
        draws[r] = std::move(stat);
        ok[r] = 1;
      }
    } catch (const std::exception&) {
    }
  });
  for (std::size_t r = 0; r < draws.size(); ++r) {
    if (ok[r]) {
      out.replicates.push_back(std::move(draws[r]));
    } else {
      ++out.dropped;
    }
  }
  if (out.replicates.empty()) return out;
  const std::size_t dim = out.replicates.front().size();
  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<double> col;
    for (const auto& rep : out.replicates)
      if (rep.size() == dim) col.push_back(rep[j]);
    out.standard_deviation.push_back(detail::sample_sd(col));
    out.lower.push_back(detail::percentile(col, 0.025));
    out.upper.push_back(detail::percentile(col, 0.975));
  }
  return out;
}

inline FitResult fit_mle(const std::vector<CustomerRecord>& records, const EstimationConfig& config);

/// Statistic re-fitting the value model on a resampled (pre-augmentation) set.
inline Statistic fit_statistic(EstimationConfig config) {
  config.bootstrap_reps = 0;
  config.restarts = 0;
  return [config](const std::vector<CustomerRecord>& sample) {
    FitResult fit = fit_mle(augment_zero_price(sample), config);
    if (!fit.converged) return std::vector<double>{};
    return fit.parameters;
  };
}

/// Maximum-likelihood fit on zero-price-augmented records. Deterministic:
/// a data-driven start plus `restarts` seeded perturbations; best kept.
inline FitResult fit_mle(const std::vector<CustomerRecord>& records, const EstimationConfig& config) {
  validate(config);
  FitResult result;
  MleProblem prob(records, config);
  result.parameter_names = prob.names();
  result.size_pmf = empirical_size_distribution(records);

  std::vector<double> prices;
  prices.reserve(records.size());
  for (const auto& r : records) prices.push_back(r.observed_unit_price);
  std::vector<double> start(prob.dim(), 0.0);
  start[0] = detail::mean_of(prices);
  start.back() = std::max(detail::sample_sd(prices), std::max(config.sigma_floor, 1.0));

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<std::vector<double>> starts{start};
  for (int r = 0; r < config.restarts; ++r) {
    std::vector<double> s = start;
    s[0] *= std::uniform_real_distribution<double>(0.5, 1.5)(rng);
    s.back() *= std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    for (std::size_t j = 1; j + 1 < s.size(); ++j)
      s[j] = std::normal_distribution<double>(0.0, 0.1 * s.back())(rng);
    starts.push_back(std::move(s));
  }

  detail::NewtonOutcome best;
  for (const auto& s : starts) {
    auto o = detail::newton_ascent(prob, prob.to_theta(s), config);
    if (o.loglik > best.loglik) best = std::move(o);
  }

  result.parameters = prob.to_params(best.theta);
  result.neg_log_likelihood = -best.loglik;
  result.converged = best.converged;
  result.iterations = best.iterations;
  result.gradient_norm = best.grad_norm;
  result.sigma_at_floor = best.at_floor;
  if (!best.converged)
    result.warnings.push_back("optimizer stopped before reaching the gradient tolerance");
  if (prob.min_outcome_probability(best.theta) > 1.0 - 1e-10) {
    result.separated = true;
    result.converged = false;
    result.warnings.push_back(
        "data are perfectly separated; fitted probabilities saturate at 0/1 and the "
        "optimizer ran to the boundary");
  }
  result.value_model = prob.to_model(result.parameters, config.bins.estimation_bins);

  if (config.bootstrap_reps > 0) {
    std::vector<CustomerRecord> raw = records;
    if (is_zero_price_augmented(records)) raw.resize(records.size() / 2);
    auto boot = bootstrap(raw, config.bootstrap_reps, config.seed, fit_statistic(config));
    result.standard_errors = boot.standard_deviation;
    if (boot.dropped > 0)
      result.warnings.push_back(std::to_string(boot.dropped) + " bootstrap replicates dropped");
  }
  return result;
}

/// Sum of log-probabilities of the observed outcomes, evaluated record by
/// record from the value model (no design matrix).
inline double direct_log_likelihood(const ValueModel& m, const std::vector<CustomerRecord>& records) {
  long double acc = 0.0L;
  for (const auto& r : records) {
    const double z = (r.observed_unit_price - mean_value(m, r)) / m.sigma;
    acc += r.success ? dist::log_cdf(m.error_family, -z) : dist::log_cdf(m.error_family, z);
  }
  return static_cast<double>(acc);
}

}  // namespace tariffkit
