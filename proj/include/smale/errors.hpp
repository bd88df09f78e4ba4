#pragma once

#include <stdexcept>
#include <string>

namespace smale {

/// Point or parameter outside the domain where a model is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A matrix factorization broke down (zero pivot, non-finite entries).
class FactorizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical verification of a theoretical property failed.
class VerificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The standing assumption that h_1 is non-degenerate does not hold.
class AssumptionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or incomplete run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace smale
