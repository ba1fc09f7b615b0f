#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fdw {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the admissible range of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent arguments (grid mismatch, missing data, malformed input).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// An algorithm failed to converge or lost accuracy.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Eigenvalue bracketing missed or duplicated a root.
class SpectralError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A least-squares fit did not reach an acceptable residual.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Configuration text could not be parsed or validated. Each issue names the
/// offending line.
class ConfigError : public Error {
 public:
  using Error::Error;
  explicit ConfigError(std::vector<std::string> issues) : Error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::string out;
    for (const auto& s : issues) out += (out.empty() ? "" : "\n") + s;
    return out;
  }
  std::vector<std::string> issues_;
};

}  // namespace fdw
