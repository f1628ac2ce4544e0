#pragma once

#include <stdexcept>
#include <string>

namespace ambmerton {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input data parsed but failed validation (non-monotone dates, bad prices, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed text input; carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long line = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

/// Overflow, NaN, or another floating-point failure inside a computation.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Objective or function evaluated outside the region where it is defined.
class DomainError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Root finder called on an interval without a sign change.
class BracketError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Iterative method ran out of iterations.
class ConvergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Singular or badly conditioned matrix.
class LinalgError : public NumericError {
public:
    using NumericError::NumericError;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ambmerton
