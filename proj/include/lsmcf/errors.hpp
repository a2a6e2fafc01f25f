#pragma once

#include <stdexcept>
#include <string>

namespace lsmcf {

/// Base of every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid grid, initial-data or solver parameters.
class SpecError : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment configuration (schema or value checks).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class CertificationFailure : public Error {
 public:
  using Error::Error;
};

/// Non-finite samples or runaway sup-norm during time stepping.
class BlowupError : public Error {
 public:
  BlowupError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class EmptyLevelSet : public Error {
 public:
  using Error::Error;
};

/// A residual whose normalization is numerically zero.
class DegenerateTest : public Error {
 public:
  using Error::Error;
};

}  // namespace lsmcf
