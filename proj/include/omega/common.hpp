#pragma once

#include <stdexcept>
#include <string>

namespace omega {

// Error taxonomy. The CLI maps these onto exit codes (see tools/):
//   ConfigError -> 2, DataError -> 3, NumericError -> 4, anything else -> 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
  using Error::Error;
};

// Inputs that are syntactically valid but numerically unusable (e.g. a
// near-zero vector passed to a normalizer).
struct DegenerateInput : Error {
  using Error::Error;
};

// An operation was called out of sequence (e.g. backward without forward).
struct StateError : Error {
  using Error::Error;
};

// A finite-difference oracle produced a non-finite evaluation.
struct OracleFailure : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

// A metric is undefined for the given data (e.g. no unknown samples).
struct MetricUndefined : DataError {
  using DataError::DataError;
};

struct NumericError : Error {
  using Error::Error;
};

// Probabilities are clamped at this floor before any logarithm. This is part
// of the loss definitions, not just a safety net: one-hot predictions would
// otherwise produce infinities in the KL terms.
inline constexpr double kProbFloor = 1e-8;

inline constexpr double kUnitNormTol = 1e-9;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

}  // namespace omega
