#pragma once

#include <stdexcept>
#include <string>

namespace filterstab {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad dimensions, invalid probabilities, unparsable files.
// The CLI maps these to exit status 1; every other Error maps to 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// An observation with zero probability under the filter's prior.
class ZeroEvidence : public Error {
 public:
  using Error::Error;
};

class AbsoluteContinuityViolated : public Error {
 public:
  using Error::Error;
};

class SizeCapExceeded : public Error {
 public:
  using Error::Error;
};

class NonUniqueInvariant : public Error {
 public:
  using Error::Error;
};

class InfiniteInitialDivergence : public Error {
 public:
  using Error::Error;
};

class NonFiniteMoment : public Error {
 public:
  using Error::Error;
};

class SingularDiagonal : public Error {
 public:
  using Error::Error;
};

class PositivityViolated : public Error {
 public:
  using Error::Error;
};

class QuadratureNotConverged : public Error {
 public:
  using Error::Error;
};

class SolverNotConverged : public Error {
 public:
  using Error::Error;
};

}  // namespace filterstab
