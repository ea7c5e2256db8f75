#pragma once

#include <stdexcept>
#include <string>

namespace landau {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (z = 0, γ < −d, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A parameter tuple that violates one of the exponent constraints.
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

class GridMismatchError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or runaway negativity during time stepping.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double time, double sup_norm)
      : Error(what), time_(time), sup_norm_(sup_norm) {}
  double time() const { return time_; }
  double sup_norm() const { return sup_norm_; }

 private:
  double time_;
  double sup_norm_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace landau
