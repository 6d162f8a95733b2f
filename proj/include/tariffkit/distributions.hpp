#pragma once

// Standardized error laws for the per-unit value regression. Every function
// takes a standardized argument z = (x - mu) / sigma.

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tariffkit {

enum class ErrorFamily { logistic, normal };

inline std::string_view to_string(ErrorFamily f) {
  return f == ErrorFamily::logistic ? "logistic" : "normal";
}

inline ErrorFamily parse_error_family(std::string_view s) {
  if (s == "logistic") return ErrorFamily::logistic;
  if (s == "normal") return ErrorFamily::normal;
  throw std::invalid_argument("unknown error family: " + std::string(s));
}

namespace dist {

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double cdf(ErrorFamily f, double z) {
  if (f == ErrorFamily::logistic) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// 1 - cdf(z), accurate in the upper tail.
inline double survival(ErrorFamily f, double z) { return cdf(f, -z); }

inline double pdf(ErrorFamily f, double z) {
  if (f == ErrorFamily::logistic) {
    const double e = std::exp(-std::abs(z));
    return e / ((1.0 + e) * (1.0 + e));
  }
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double log_cdf(ErrorFamily f, double z) {
  if (f == ErrorFamily::logistic) return -softplus(-z);
  if (z > -30.0) return std::log(cdf(f, z));
  // Asymptotic expansion of log Phi(z) in the far lower tail.
  const double z2 = z * z;
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

// E[eps * 1{eps < z}] for the standardized law.
inline double partial_mean_below(ErrorFamily f, double z) {
  if (std::isinf(z)) return 0.0;
  if (f == ErrorFamily::logistic) return z * cdf(f, z) - softplus(z);
  return -pdf(f, z);
}

// E[(eps - z)^+] for the standardized law.
inline double expected_excess(ErrorFamily f, double z) {
  if (f == ErrorFamily::logistic) return softplus(-z);
  return pdf(f, z) - z * survival(f, z);
}

// Inverse hazard of the lower side: pdf(z) / cdf(z), stable for z << 0.
inline double mills_lower(ErrorFamily f, double z) {
  if (f == ErrorFamily::logistic) return survival(f, z);
  if (z > -30.0) return pdf(f, z) / cdf(f, z);
  const double z2 = z * z;
  return -z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2));
}

inline double variance(ErrorFamily f) {
  return f == ErrorFamily::logistic ? std::numbers::pi * std::numbers::pi / 3.0 : 1.0;
}

template <typename Rng>
double draw(ErrorFamily f, Rng& rng) {
  if (f == ErrorFamily::logistic) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    return std::log(u) - std::log1p(-u);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  return normal(rng);
}

}  // namespace dist
}  // namespace tariffkit
