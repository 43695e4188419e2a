#pragma once

#include <stdexcept>
#include <string>

namespace ffwave {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or construction parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a map (e.g. an energy outside (a, b)).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A check was requested that the inputs cannot support.
class UnsupportedCheck : public Error {
 public:
  using Error::Error;
};

/// A linear system is singular or too ill-conditioned to trust.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double condition)
      : Error(what + " (estimated condition number " + std::to_string(condition) + ")"),
        condition_(condition) {}

  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

}  // namespace ffwave
