#pragma once

#include <stdexcept>
#include <string>

#define GMMOT_VERSION "0.1.0"

namespace gmmot {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad arguments: dimension mismatches, out-of-range parameters, shape problems.
struct InvalidInput : Error {
  using Error::Error;
};

/// A matrix that was required to be positive semi-definite is not.
struct NotPsd : Error {
  using Error::Error;
};

/// Numerical failure that is not a shape problem (diverged iteration, NaN, ...).
struct NumericalError : Error {
  using Error::Error;
};

/// Malformed file contents (CSV cells, JSON fields).
struct ParseError : Error {
  using Error::Error;
};

/// A resource guard tripped (e.g. combinatorial component table too large).
struct ResourceGuard : Error {
  using Error::Error;
};

}  // namespace gmmot
