#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace roboscript {

// Base of every error thrown by the library. `kind()` is a stable
// identifier used for machine-parsable CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& m) : Error("PreconditionViolation", m) {}
};

class PlacementFailure : public Error {
 public:
  explicit PlacementFailure(const std::string& m) : Error("PlacementFailure", m) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& m)
      : Error("ParseError", "line " + std::to_string(line) + ": " + m), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error("IoError", m) {}
};

}  // namespace roboscript
