#pragma once

#include <stdexcept>
#include <string>

namespace sdpcert {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A precondition on user-supplied data was violated.
struct InvalidInput : Error {
  using Error::Error;
};

/// Malformed text input; carries the 1-based line number.
struct ParseError : Error {
  int line;
  ParseError(const std::string& what, int line_no)
      : Error(what + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

struct Infeasible : Error {
  using Error::Error;
};

struct Unbounded : Error {
  using Error::Error;
};

struct NumericalBreakdown : Error {
  using Error::Error;
};

/// The iterative dual-certificate construction stopped contracting.
struct CertificateFailure : Error {
  using Error::Error;
};

}  // namespace sdpcert
