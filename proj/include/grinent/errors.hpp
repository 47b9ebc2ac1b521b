#pragma once

#include <stdexcept>
#include <string>

namespace grinent {

// Root of every error raised by the library. The CLI maps each subclass onto
// its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

// q-parameter transform hit C*q + D == 0 (or produced a non-physical beam).
class SingularPropagationError : public Error {
 public:
  using Error::Error;
};

// Density matrix failed the Hermitian / unit-trace / PSD checks.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

// Tomography records do not determine the density matrix.
class IncompleteSetError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

// Malformed CSV/JSON input. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// Run configuration did not validate (missing or unknown field, wrong type).
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace grinent
