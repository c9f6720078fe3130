#pragma once

#include <stdexcept>
#include <string>

namespace vbl {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (config file, catalog parameters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical check failed: solver non-convergence, unresolved gap, etc.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace vbl
