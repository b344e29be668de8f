#pragma once

#include <stdexcept>

namespace ilro {

// Malformed configuration / CLI input (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing prerequisite artifact, e.g. no calibration table (exit code 3).
struct PrereqError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Comparison threshold exceeded or incomparable inputs (exit code 4).
struct CompareError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Regression / law-fit failure.
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Time-domain simulation or measurement failure.
struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ilro
