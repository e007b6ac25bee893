#pragma once

#include <stdexcept>
#include <string>

namespace gmmf {

/// Shapes of two operands do not agree, or a template is larger than its background.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value violates a documented precondition (bad epsilon, asymmetric adjacency, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Experiment or CLI configuration could not be validated.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exhaustive search was requested on an instance whose injection count exceeds the guard.
class OracleTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative routine failed to reach its tolerance within its sweep budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gmmf
