#ifndef NORMSOL_ERRORS_HPP
#define NORMSOL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace normsol {

/// Invalid argument for a numerical operation (negative input, grid mismatch, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Malformed or inadmissible run configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Iterative method failed (step collapse, no convergence).
class NonConvergence : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Multiplier requested for a component with zero mass.
class UndefinedMultiplier : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Operation not available in the requested dimension.
class UnsupportedDimension : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

} // namespace normsol

#endif
