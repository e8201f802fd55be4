#pragma once

#include <stdexcept>
#include <string>

namespace hsr {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter violates a documented invariant.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Operand shapes do not compose.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input data is unusable (non-finite entries, zero columns, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Experiment or dataset configuration is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem or format failure; the message names the offending file.
class IoError : public Error {
 public:
  using Error::Error;
};

// Wraps a failure with the experiment stage it happened in.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace hsr
