#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cklemap {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad shapes, out-of-range indices, violated preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The model cannot be evaluated at the requested point. The trust-region
/// solver treats this as a failed trial step rather than a fatal error.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// exp(y) overflowed or produced a non-finite transmissibility.
class InvalidParameter : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

/// The FV system has no Dirichlet face and is therefore singular.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// Cholesky breakdown; `pivot()` is the failing column in factor order.
class NotPositiveDefinite : public EvaluationError {
 public:
  NotPositiveDefinite(const std::string& what, std::ptrdiff_t pivot)
      : EvaluationError(what), pivot_(pivot) {}

  std::ptrdiff_t pivot() const noexcept { return pivot_; }

 private:
  std::ptrdiff_t pivot_;
};

/// Config or dataset file that does not match the expected schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cklemap
