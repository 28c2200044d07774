#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dpkmeans {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

/// Base class of all library errors. `exit_code()` distinguishes input
/// validation problems (1) from numeric failures (2) for the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 2; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 1; }
};

// -- numeric failures --------------------------------------------------------

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NotPsdError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public Error {
 public:
  using Error::Error;
};

class NonSquareRootableError : public Error {
 public:
  using Error::Error;
};

class InfeasibleResultError : public Error {
 public:
  using Error::Error;
};

class EmptyClusterError : public Error {
 public:
  using Error::Error;
};

class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class EmptyDifferencesError : public Error {
 public:
  using Error::Error;
};

class DegenerateLossError : public Error {
 public:
  using Error::Error;
};

// -- input validation --------------------------------------------------------

class InvalidPrivacyParamsError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyAfterCleaningError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UnknownColumnError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace dpkmeans
