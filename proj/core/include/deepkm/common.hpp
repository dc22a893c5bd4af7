#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace deepkm {

// Row-major so that row i of a batch is sample i.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: bad layer chain, K > N, negative lambda, ...
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Operation called in the wrong state (e.g. backward without forward).
class StateError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied data violates a precondition (label out of range, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (IDX, delimited text, config files).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace deepkm
