#pragma once

#include <stdexcept>
#include <string>

namespace pseudopoisson {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few observations for the requested statistic (e.g. n < 2).
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An infinite series failed to converge within its term budget.
class SeriesError : public Error {
 public:
  using Error::Error;
};

/// Method-of-moments estimator does not exist for the supplied moments.
class ExistenceError : public Error {
 public:
  using Error::Error;
};

/// Existence could not be decided: a root search found nothing, but no
/// analytic window rules it out.
class ExistenceUnknownError : public ExistenceError {
 public:
  using ExistenceError::ExistenceError;
};

/// S22 == M2, so the dispersion ratio is undefined.
class DegenerateDispersionError : public Error {
 public:
  using Error::Error;
};

/// A bracketed root solve could not bracket or converge.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Invalid combination of arguments (non-nested models, bad selectors).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (CSV parse failure, negative counts).
class DataError : public Error {
 public:
  using Error::Error;
};

/// The brute-force moment grid would exceed its size cap.
class OracleInfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace pseudopoisson
