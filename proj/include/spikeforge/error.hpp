#pragma once

#include <stdexcept>
#include <string>

namespace spikeforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates an operation's precondition (dimension mismatch, negative rate, ...).
class RejectedInput : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment or model configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed weight, dataset or config file. The message carries the offending field path.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& field_path, const std::string& what)
      : Error(field_path + ": " + what), field_path_(field_path) {}

  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

/// A simulation produced a non-finite value.
class NumericFault : public Error {
 public:
  using Error::Error;
};

/// Training diverged.
class TrainingFault : public NumericFault {
 public:
  using NumericFault::NumericFault;
};

/// A layer whose statistics make threshold or norm computations meaningless.
class DegenerateLayer : public NumericFault {
 public:
  using NumericFault::NumericFault;
};

/// Weight adjustment hit an invalid regime (non-positive adjusted threshold).
class AdjustmentFault : public NumericFault {
 public:
  using NumericFault::NumericFault;
};

}  // namespace spikeforge
