#pragma once

#include <stdexcept>
#include <string>

namespace tariffkit {

// Missing covariates, unknown years, malformed settings.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Arguments outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Valid input that the requested operation does not handle
// (e.g. evaluating an individualized schedule as a posted tariff).
struct UnsupportedError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace tariffkit
