#ifndef GRPOSIM_ERRORS_HPP_
#define GRPOSIM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace grposim {

// Bad configuration (unknown keys, invalid values). CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent data files / records. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (NaN/Inf in parameters or objective, infinite KL). CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace grposim

#endif  // GRPOSIM_ERRORS_HPP_
