#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csmorse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset()` is the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(message + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation outside the domain of an elementary function (log of a nonpositive
/// number, division by zero, ...). Carries the offending subexpression.
class DomainError : public Error {
 public:
  DomainError(const std::string& message, std::string subexpression)
      : Error(message + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}

  const std::string& subexpression() const noexcept { return subexpression_; }

 private:
  std::string subexpression_;
};

/// Failure of a projection / Newton solve on a constraint system.
class GeometryError : public Error {
 public:
  enum class Kind { NonConvergence, RankDeficient, InvalidInput };

  GeometryError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Invalid scenario or problem data (CLI exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Results that contradict the theory they are supposed to satisfy, which signals a
/// numerical misclassification upstream (CLI exit code 3).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace csmorse
