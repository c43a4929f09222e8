#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace effdyn {

/// A computation could not be completed (non-finite values, failed
/// convergence, Krylov error above tolerance).
class NumericalAbort : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Collects every violation found while validating a configuration.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const { return violations_; }

private:
  std::vector<std::string> violations_;
};

} // namespace effdyn
