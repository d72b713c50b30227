#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace reds {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorKind {
  InvalidInput,
  InvalidConfig,
  Evaluation,
  SingularMatrix,
  EmptySubspace,
  InsufficientData,
  UnsupportedCapability,
  DegenerateAttribute,
  Io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` carries the category the
/// CLI maps to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace reds
