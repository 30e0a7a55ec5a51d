#pragma once

#include <stdexcept>
#include <string>

namespace seqdr {

// Malformed or inconsistent input data (CSV parse failures, invariant
// violations, sizing problems). CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A nuisance-stage subsample that cannot support its loss (e.g. no treated
// rows where the loss requires them).
class DegenerateSubsampleError : public DataError {
 public:
  explicit DegenerateSubsampleError(const std::string& msg) : DataError(msg) {}
};

// Division by an exactly-zero propensity with clipping disabled.
class NumericalDegeneracyError : public std::runtime_error {
 public:
  explicit NumericalDegeneracyError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Monte Carlo study aborted (too many failed replications). Exit code 3.
class StudyError : public std::runtime_error {
 public:
  explicit StudyError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace seqdr
