#pragma once

#include <stdexcept>
#include <string>

namespace varls {

/// Base of every error thrown by the library. `exit_code()` is the status the
/// command-line tool returns when the error escapes a subcommand.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 1; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class UnsupportedMethod : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

/// Malformed or unreadable data files (IDX, CSV).
class FormatError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 3; }
};

/// Covariance decomposition failures, singular Hessians and the like.
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 4; }
};

}  // namespace varls
