#pragma once

#include <stdexcept>
#include <string>

namespace tilefit {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Out-of-range or inconsistent arguments.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// No usable observations after filtering.
class EmptyDataError : public Error {
 public:
  using Error::Error;
};

// Input violates a documented precondition (e.g. a density that is not normalized).
class ContractError : public Error {
 public:
  using Error::Error;
};

// A density whose total mass is zero, negative, or has no support.
class DegenerateDensityError : public Error {
 public:
  using Error::Error;
};

// Malformed document or CSV input; `what()` carries the location.
class ParseError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double lambda)
      : Error(what), lambda_(lambda) {}

  // Penalty value at which the solver gave up (0 for unpenalized fits).
  double lambda() const noexcept { return lambda_; }

 private:
  double lambda_;
};

}  // namespace tilefit
