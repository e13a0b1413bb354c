#pragma once

#include <stdexcept>
#include <string>

namespace daec {

// Operand shapes do not line up.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Input outside an operation's domain (empty sequence, series too short, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Bad configuration: unknown kind, fraction out of range, missing seed.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A scalar function returned inf/nan during numeric differentiation.
struct EvaluationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace daec
