#pragma once

#include <stdexcept>

namespace dali {

/// Shape mismatch between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input outside an operation's mathematical domain (e.g. log of a non-positive value).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Caller violated an API precondition.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Object used in a state that forbids the operation (e.g. backward twice on one tape).
struct StateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Operation not available for this model variant.
struct UnsupportedError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Non-finite value encountered at run time.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad experiment configuration (maps to exit code 1 in the CLI).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File read/write/parse failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dali
