#pragma once

#include <stdexcept>
#include <string>

namespace diffmean {

// Base of every error raised by the library. CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the documented domain (|x| > 1, t <= 0, m < 2, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A truncated series did not reach its tail bound within max_terms, or
// precision was exhausted while resolving cancellation.
class TruncationError : public Error {
 public:
  using Error::Error;
};

// Requested kernel family/dimension combination is not implemented.
class UnsupportedFamily : public Error {
 public:
  using Error::Error;
};

// log_map target is (numerically) the antipode of the base point.
class CutLocusError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line) : Error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Estimator or experiment failed a numerical invariant (e.g. too many
// non-converged bootstrap replicates).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace diffmean
