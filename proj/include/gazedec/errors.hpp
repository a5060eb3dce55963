#pragma once

#include <stdexcept>
#include <string>

namespace gazedec {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; message carries the 1-based line number.
struct ParseError : Error {
  using Error::Error;
};

// Feature-vector length does not match the model/dataset dimension.
struct DimensionError : Error {
  using Error::Error;
};

// Calibration method cannot be applied to the given calibration set.
struct NotApplicableError : Error {
  using Error::Error;
};

struct InsufficientDataError : Error {
  using Error::Error;
};

// Least-squares design matrix is rank deficient and no ridge was requested.
struct RankDeficiencyError : Error {
  using Error::Error;
};

// Optimization produced a non-finite loss.
struct TrainingError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace gazedec
