#pragma once

#include <stdexcept>
#include <string>

namespace mediation {

enum class ErrorKind { validation, criterion, estimand, capacity };

/// Base of every error thrown by the library. The kind decides the CLI exit
/// code: validation and capacity errors map to 1, criterion and estimand
/// errors to 2.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorKind::validation, message) {}
};

class CriterionError : public Error {
 public:
  explicit CriterionError(const std::string& message)
      : Error(ErrorKind::criterion, message) {}
};

class EstimandError : public Error {
 public:
  explicit EstimandError(const std::string& message)
      : Error(ErrorKind::estimand, message) {}
};

class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& message)
      : Error(ErrorKind::capacity, message) {}
};

}  // namespace mediation
