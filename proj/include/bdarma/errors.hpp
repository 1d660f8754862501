#pragma once

#include <stdexcept>
#include <string>

namespace bdarma {

// Base class for every error raised by the library. Subclasses identify the
// failing contract so callers (the CLI in particular) can map them to exit
// codes without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Data validation failures (bad input files, zero shares, calendar gaps).
class DataError : public Error {
public:
    using Error::Error;
};

class ZeroComponent : public DataError {
public:
    using DataError::DataError;
};

class GapError : public DataError {
public:
    using DataError::DataError;
};

class ParseError : public DataError {
public:
    using DataError::DataError;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class IncompatibleComposition : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class InitializationError : public Error {
public:
    using Error::Error;
};

class SingularDesign : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class InsufficientHistory : public Error {
public:
    using Error::Error;
};

class DegenerateSeries : public Error {
public:
    using Error::Error;
};

class SingularCovariance : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace bdarma
