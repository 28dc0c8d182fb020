#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace apo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidTriplet : public Error {
 public:
  using Error::Error;
};

class InvalidIndex : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidPolicy : public Error {
 public:
  using Error::Error;
};

class InvalidInstance : public Error {
 public:
  using Error::Error;
};

// Non-SPD matrix handed to a symmetric solve.
class MatrixConditioning : public Error {
 public:
  using Error::Error;
};

// Non-finite loss inside an optimizer. Carries the offending iterate.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, Eigen::VectorXd iterate)
      : Error(what), iterate_(std::move(iterate)) {}
  const Eigen::VectorXd& iterate() const { return iterate_; }

 private:
  Eigen::VectorXd iterate_;
};

// Configuration problem; `field` is a dotted path such as
// "learners[1].params.B".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace apo
