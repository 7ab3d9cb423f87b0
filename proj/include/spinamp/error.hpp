#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spinamp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller supplied a value outside an operation's domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or system description. Carries the offending
/// line when one is known (0 otherwise).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A computation produced a result that violates a physical invariant or
/// failed to converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace spinamp
