#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace amdkit {

// Every error raised by the toolkit derives from Error so the CLI can map
// them onto exit codes in one place.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DegreeError : public Error {
 public:
  using Error::Error;
};

/// Rank-deficient Jacobian or frame.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// A theorem hypothesis was measured and found violated.
class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& what, double measured)
      : Error(what + " (measured defect " + std::to_string(measured) + ")"), measured_(measured) {}
  double measured() const { return measured_; }

 private:
  double measured_;
};

/// Too many samples were skipped for a check to mean anything.
class InconclusiveError : public Error {
 public:
  using Error::Error;
};

/// Quadrature or solver did not converge to the requested tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class PlacementError : public Error {
 public:
  using Error::Error;
};

/// Scene-file validation failure; `location` is a JSON-pointer-like path.
class ValidationError : public Error {
 public:
  ValidationError(std::string location, const std::string& what)
      : Error(location + ": " + what), location_(std::move(location)) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

}  // namespace amdkit
