#pragma once

#include <stdexcept>
#include <string>

namespace stmlp {

/// Dimension mismatch between operands; the message names both shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent dataset content (bad records, missing classes,
/// undefined metrics on empty inputs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or configuration/data mismatch.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File could not be read, written, or parsed at the container level.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stmlp
