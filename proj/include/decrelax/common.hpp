#pragma once

#include <stdexcept>
#include <string>

namespace decrelax {

// Everything thrown by the library derives from Error, so callers can tell
// library failures apart from std:: internals.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent matrix/vector shapes; the message names the offending object
// (and timestep, where applicable).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// One of the paper-level model assumptions is violated (missing self-loop,
// no causal input-to-output path, ...).
class AssumptionError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

// Rejection sampler acceptance rate collapsed.
class RejectionRateError : public Error {
 public:
  using Error::Error;
};

// Problem-file validation failure.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class SolveError : public Error {
 public:
  using Error::Error;
};

// Default scale factor for the nonzero-block test shared by the stacking
// and precedence checks: a block is treated as nonzero when its max-abs
// entry exceeds tau_z * (1 + max-abs of the product factors).
inline constexpr double kDefaultTauZ = 1e-12;

}  // namespace decrelax
