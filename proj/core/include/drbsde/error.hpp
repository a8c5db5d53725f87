#pragma once

#include <stdexcept>
#include <string>

namespace drbsde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a structural invariant or a standing assumption.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The numerical scheme could not produce a solution.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace drbsde
