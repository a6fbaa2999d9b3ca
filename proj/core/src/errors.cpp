#include "capforge/errors.hpp"

#include <utility>

namespace capforge {

ConfigError::ConfigError(std::string field, const std::string& what)
    : Error(field.empty() ? what : field + ": " + what),
      field_(std::move(field)),
      detail_(what) {}

}  // namespace capforge
