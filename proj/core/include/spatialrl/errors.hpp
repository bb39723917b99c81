#ifndef SPATIALRL_ERRORS_HPP_
#define SPATIALRL_ERRORS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spatialrl {

// Base for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Geometry failures. The key-frame extractor treats any of these as a
// forced acceptance, so they share a base.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class FrameTooSmall : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class InsufficientMatches : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class EstimationFailed : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

class DegenerateProjection : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

// Model client transport failure after the retry budget is exhausted.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status)
      : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class PerceptionUnavailable : public Error {
 public:
  using Error::Error;
};

class ConsistencyUnavailable : public Error {
 public:
  using Error::Error;
};

class MalformedGroup : public Error {
 public:
  using Error::Error;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, std::int64_t step)
      : Error(what), step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

class InvalidFoldCount : public Error {
 public:
  using Error::Error;
};

// Bad input files or configuration (CLI maps these to exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace spatialrl

#endif  // SPATIALRL_ERRORS_HPP_
