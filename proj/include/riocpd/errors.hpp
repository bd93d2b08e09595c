#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace riocpd {

/// Raw time index into an observation stream (0-based).
using Index = long;

/// A caller broke a documented precondition (dimension mismatch, empty
/// history, width < 2, ...).
class ContractError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Numeric failure on otherwise well-formed input: non-finite entries or
/// loss of positive definiteness.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A window whose correlation matrix remained non-PD after jitter
/// escalation. Carries the offending window's start index.
class DegenerateWindowError : public NumericError {
public:
  DegenerateWindowError(const std::string& what, Index window_index)
      : NumericError(what), window_index_(window_index) {}

  Index window_index() const noexcept { return window_index_; }

private:
  Index window_index_;
};

/// Invalid run configuration (thresholds, flags, incompatible options).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. `row` is the 1-based line number.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t row)
      : std::runtime_error(what + " (row " + std::to_string(row) + ")"), row_(row) {}

  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

} // namespace riocpd
