#pragma once

#include <stdexcept>
#include <string>

namespace lbreuse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration or input data (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A precondition on an argument was violated, e.g. an out-of-bounds action.
class InvalidArgument : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Missing, truncated or incompatible artifact file (CLI exit code 3).
class ArtifactError : public Error {
 public:
  using Error::Error;
};

// Divergence or non-finite values during numerical work (CLI exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace lbreuse
