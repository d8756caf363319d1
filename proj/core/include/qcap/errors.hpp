#pragma once

#include <stdexcept>
#include <string>

namespace qcap {

// Base classes map onto the CLI exit codes: ConfigError -> 2, DataError -> 3,
// NumericalError -> 4. Anything else escaping to main is an internal bug.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};

struct NotDefiniteOutcome : DataError {
  using DataError::DataError;
};
struct ModelKindMismatch : ConfigError {
  using ConfigError::ConfigError;
};
struct MissingRate : DataError {
  using DataError::DataError;
};
struct RateOutOfRange : DataError {
  using DataError::DataError;
};
struct SchemaError : DataError {
  using DataError::DataError;
};
struct AlreadyStripped : DataError {
  using DataError::DataError;
};
struct UnsupportedVersion : DataError {
  using DataError::DataError;
};
struct EmptyTrainingSplit : DataError {
  using DataError::DataError;
};

}  // namespace qcap
