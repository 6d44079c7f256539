#pragma once

#include <stdexcept>
#include <string>

namespace symprice {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (x <= 0 for G, invalid params).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation called on the wrong branch (e.g. rho = -1 passed to the
/// quadrature density).
class BranchError : public Error {
 public:
  using Error::Error;
};

/// Quadrature, root finding or optimisation did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed input: CSV files, manifests, grids.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Too few tail points, degenerate tails.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Simulation policy violation (nonpositive ratio under Abort, rejection
/// rate above the hard limit).
class PolicyError : public Error {
 public:
  using Error::Error;
};

}  // namespace symprice
