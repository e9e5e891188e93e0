#include "cascade/core/errors.h"

namespace cascade::core {
namespace {

std::string join_fields(const std::vector<std::string>& fields) {
  std::string out = "invalid config";
  for (std::size_t i = 0; i < fields.size(); ++i) {
    out += i == 0 ? ": " : "; ";
    out += fields[i];
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> fields)
    : Error(join_fields(fields)), fields_(std::move(fields)) {}

ConfigError::ConfigError(std::string message, std::vector<std::string> fields)
    : Error(std::move(message)), fields_(std::move(fields)) {}

}  // namespace cascade::core
