#pragma once

#include <stdexcept>
#include <string>

namespace epiguide {

/// Invalid configuration values (radii ordering, bounds, rates, unknown keys).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files: meshes, trial logs, scene files.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation called outside its domain (empty log, mismatched lengths, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

} // namespace epiguide
