#pragma once

#include <stdexcept>
#include <string>

namespace caasr {

// Base class for all recoverable failures raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad command line, unknown config key, malformed --set. CLI exit code 1.
struct UsageError : Error {
  using Error::Error;
};

// Malformed, inconsistent, or empty input data; file format violations. CLI exit code 2.
struct DataError : Error {
  using Error::Error;
};

// Non-finite values or divergence during numeric work. CLI exit code 3.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace caasr
