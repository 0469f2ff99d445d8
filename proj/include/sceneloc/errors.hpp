#pragma once

#include <stdexcept>
#include <string>

namespace sceneloc {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition or bad user-supplied parameter.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed or missing input files.
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, failed factorizations and similar numerical breakdowns.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// An information matrix that cannot be inverted.
class SingularStateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace sceneloc
