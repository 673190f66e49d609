#pragma once

#include <stdexcept>
#include <string>

namespace eegwl {

// Bad parameters, malformed config/input schema. CLI exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Data problems discovered while processing. CLI exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Calibration could not be established (thresholds, ASR). CLI exit code 3.
struct CalibrationError : DataError {
  using DataError::DataError;
};

// A required upstream stage output is missing. CLI exit code 4.
struct DependencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace eegwl
