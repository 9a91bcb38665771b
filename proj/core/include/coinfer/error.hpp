#pragma once

#include <stdexcept>
#include <string>

namespace coinfer {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Iterative routine failed to converge or hit an ill-conditioned system.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or invalid configuration / input file. `field` names the
// offending key when known.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  explicit ConfigError(const std::string& what) : Error(what) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace coinfer
