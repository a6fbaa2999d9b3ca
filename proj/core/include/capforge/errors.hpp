#pragma once

#include <stdexcept>
#include <string>

namespace capforge {

// Base of every error the library throws. The CLI maps the concrete
// categories onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data violates a contract (length mismatch, dangling reference,
// missing embedding source).
class DataError : public Error {
 public:
  using Error::Error;
};

// A file on disk is missing, unparsable, or of an unsupported version.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A file parsed but its checksum or size does not match the manifest.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// An argument is outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A configuration object is invalid. `field()` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what);
  const std::string& field() const noexcept { return field_; }
  // Message without the field prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string field_;
  std::string detail_;
};

}  // namespace capforge
