#pragma once

#include <stdexcept>
#include <string>

namespace donorspin {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration document. `path()` is a JSON-pointer-like key path
/// (e.g. `$.segments[2].kind`).
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A parameter violates a physical invariant. `field()` names it.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Raised by the least-squares engine when the normal equations are singular.
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

}  // namespace donorspin
