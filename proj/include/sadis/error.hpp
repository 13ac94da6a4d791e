#pragma once

#include <stdexcept>
#include <string>

namespace sadis {

// Base of every error raised by the library. The CLI maps IoError to exit
// code 3 and everything else to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Malformed file contents (bad magic, unparsable header field).
class FormatError : public Error {
public:
    using Error::Error;
};

// Well-formed input that this library does not handle (dtype, layout, bit depth).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

// Shape or size contract violated.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Non-finite values or an otherwise invalid value object.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Input with zero variance where a covariance must be inverted or rooted.
class DegenerateError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace sadis
