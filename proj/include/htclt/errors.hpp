#pragma once

#include <stdexcept>
#include <string>

namespace htclt {

// Invalid parameters in an ensemble spec, config file or call.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation (real z, Im λ > 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Request exceeds the enumeration or memory budget.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Fixed-point or linear solve did not converge.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class UnsupportedFamilyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace htclt
