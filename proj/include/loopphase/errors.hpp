#pragma once

#include <stdexcept>
#include <string>

namespace loopphase {

/// Raised when an input violates a documented invariant. `field()` names the
/// offending parameter (dotted config path where one exists).
class ValidationError : public std::invalid_argument {
public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)), reason_(what) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

private:
  std::string field_;
  std::string reason_;
};

/// Numerical failure: quadrature non-convergence, singular systems, etc.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// File system / format failure. The message always carries the path.
class IoError : public std::runtime_error {
public:
  IoError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

} // namespace loopphase
