#pragma once

#include <stdexcept>

namespace sthcss {

// Error buckets mirror the CLI exit-code contract:
//   ConfigError  -> exit 1 (configuration / validation)
//   IoError      -> exit 2 (I/O and file format)
//   NumericError -> exit 3 (numerical / runtime)
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad operation arguments (kernel size 0, dropout p outside [0,1), ...).
class InvalidArgumentError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Shape mismatches; messages name both offending shapes.
class DimensionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Input data lacks a required column or field.
class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// A split or series is too short for the requested window.
class InsufficientDataError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Unparseable file contents (CSV cells, checkpoint magic, ...).
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// All-identical node features make the Gaussian kernel scale collapse.
class DegenerateScaleError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Zero-range regression target; normalized metrics are undefined.
class DegenerateTargetError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Non-finite loss during training.
class DivergenceError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace sthcss
