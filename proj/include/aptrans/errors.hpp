#pragma once

#include <stdexcept>
#include <string>

namespace aptrans {

/// Invalid model or option parameter (df <= 1, a1 outside (0,1), S <= 0, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation (p not in (0,1), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Input is valid on its own but the fitted or given process cannot host it,
/// e.g. a master-scale band whose assigned PD lies above PD_max.
class ModelDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Unusable dataset (empty, malformed records, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aptrans
