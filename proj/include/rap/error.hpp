#pragma once

#include <stdexcept>
#include <string>

namespace rap {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the function.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A documented precondition (other than a numeric domain) does not hold.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// The rejection loop hit its attempt cap: the packing is too dense to continue.
class SaturationError : public Error {
  public:
    SaturationError(const std::string& msg, unsigned long long attempts)
        : Error(msg), attempts_(attempts) {}
    unsigned long long attempts() const noexcept { return attempts_; }

  private:
    unsigned long long attempts_;
};

/// A mean-field model evaluated outside the range where it is a probability.
class ModelValidityError : public Error {
  public:
    using Error::Error;
};

/// An iterative solver exhausted its budget.
class ConvergenceError : public Error {
  public:
    ConvergenceError(const std::string& msg, double residual)
        : Error(msg), residual_(residual) {}
    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

/// Malformed input file or configuration.
class ParseError : public Error {
  public:
    using Error::Error;
};

}  // namespace rap
