// Copyright (c) the sieve project contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SIEVE_ERRORS_HPP
#define SIEVE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sieve {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

// Malformed input file; carries a 1-based line number when known.
struct ParseError : Error {
  ParseError(const std::string& what, long line)
      : Error(what + " (line " + std::to_string(line) + ")"), line(line) {}
  explicit ParseError(const std::string& what) : Error(what), line(-1) {}
  long line;
};

// x had no component along v1 where one is required.
struct OrthogonalStartError : Error {
  using Error::Error;
};

// The shift does not make B = lambda*I - Sigma positive definite
// (or roundoff produced a negative quadratic form beyond tolerance).
struct ShiftError : Error {
  using Error::Error;
};

struct EstimationFailedError : Error {
  using Error::Error;
};

// A streaming run hit its sample cap.
struct BudgetError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace sieve

#endif  // SIEVE_ERRORS_HPP
