#pragma once

#include <stdexcept>
#include <string>

namespace dtsst {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree, or a dimension is out of range.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Bad argument or configuration value supplied by the caller.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed or unusable input data (dataset files, series, checkpoints).
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, divergence, or failed numerical checks.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace dtsst
