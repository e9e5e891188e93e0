#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cascade::core {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSchedule : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition (shapes, ordering, lifecycle).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> fields);
  ConfigError(std::string message, std::vector<std::string> fields);

  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

}  // namespace cascade::core
