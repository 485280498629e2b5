#ifndef INNERATT_NN_ERRORS_HPP_
#define INNERATT_NN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace inneratt {

// Shape disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what)
      : std::invalid_argument("dimension error: " + what) {}
};

// Violated precondition (bad index, non-scalar loss, empty input, ...).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what)
      : std::logic_error("contract error: " + what) {}
};

// Invalid configuration; the message lists every offending field.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what)
      : std::invalid_argument("config error: " + what) {}
};

}  // namespace inneratt

#endif  // INNERATT_NN_ERRORS_HPP_
