#pragma once

#include <stdexcept>
#include <string>

namespace bashelf {

// Precondition violation on a physics or analysis operation.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Invalid experiment configuration (bad key, out-of-range value, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Calibration target not bracketed by the statistic at the search bounds.
class BracketingError : public std::runtime_error {
 public:
  explicit BracketingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bashelf
