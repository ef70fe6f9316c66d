#pragma once

#include <stdexcept>
#include <string>

namespace vislim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  GridMismatch(int lhs, int rhs)
      : Error("grid mismatch: n=" + std::to_string(lhs) + " vs n=" + std::to_string(rhs)) {}
};

/// A density sample at or below zero. Carries the grid location.
class NonpositiveDensity : public Error {
 public:
  NonpositiveDensity(int i, int j, double value, const std::string& context = {})
      : Error("nonpositive density " + std::to_string(value) + " at grid point (" +
              std::to_string(i) + ", " + std::to_string(j) + ")" +
              (context.empty() ? std::string{} : " [" + context + "]")),
        i_(i),
        j_(j),
        value_(value) {}

  /// Scalar evaluations have no grid location; both indices are -1.
  explicit NonpositiveDensity(double value)
      : Error("nonpositive density " + std::to_string(value)), value_(value) {}

  int i() const { return i_; }
  int j() const { return j_; }
  double value() const { return value_; }

 private:
  int i_ = -1;
  int j_ = -1;
  double value_ = 0.0;
};

class CflViolation : public Error {
 public:
  CflViolation(double dt, double admissible)
      : Error("time step " + std::to_string(dt) + " violates the CFL bound; admissible dt <= " +
              std::to_string(admissible)),
        dt_(dt),
        admissible_(admissible) {}

  double dt() const { return dt_; }
  double admissible_dt() const { return admissible_; }

 private:
  double dt_;
  double admissible_;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Malformed snapshot, config or CSV input.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace vislim
