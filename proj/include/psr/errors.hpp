#pragma once

#include <stdexcept>
#include <string>

namespace psr {

// Every error raised by the library derives from Error. The `kind()` string
// is stable and ends up in the CLI's machine-readable error records.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "dimension_mismatch"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain_error"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "config_error"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io_error"; }
};

class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format_error"; }
};

/// Raised when the contraction factor is not below one, so no ultimate
/// bound exists.
class NoBoundError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "no_bound"; }
};

class DivergenceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "divergence"; }
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "infeasible_sampling"; }
};

}  // namespace psr
