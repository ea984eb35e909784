#ifndef SIMSKIP_COMMON_HPP_
#define SIMSKIP_COMMON_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace simskip {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Base of every error raised by the library. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents (bad magic, wrong version, truncated payload).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Matrix/vector dimensions disagree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf or another numerical breakdown.
class NumericsError : public Error {
 public:
  using Error::Error;
};

enum class Mode { Train, Eval };

/// Worker cap from SIMSKIP_THREADS, else the hardware concurrency (at least 1).
std::size_t worker_count();

}  // namespace simskip

#endif  // SIMSKIP_COMMON_HPP_
