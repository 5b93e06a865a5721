#pragma once

#include <stdexcept>
#include <string>

namespace m2ef {

// Contract violations (bad shapes, bad arguments)
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// File / stream problems (missing files, short reads)
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally broken on-disk content (bad magic, version, payload length)
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration values or unknown config keys
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dempster combination with conflict mass 1: no compatible belief remains.
struct TotalConflictError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Statistic whose defining denominator vanished (no comparable pairs,
// zero log-rank variance, all-equal event times).
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace m2ef
