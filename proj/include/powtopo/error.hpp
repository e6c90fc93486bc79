#pragma once

#include <stdexcept>
#include <string>

namespace powtopo {

/** Base of every error thrown by the library. */
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//! Invalid configuration or parameters supplied by the caller.
class ConfigError : public Error {
public:
    using Error::Error;
};

//! Unreadable or inconsistent input data (CSV files, placements).
class DataError : public Error {
public:
    using Error::Error;
};

//! Parameters outside the region where an analytical result applies.
class DomainError : public Error {
public:
    using Error::Error;
};

//! Structurally invalid input to a data structure (e.g. conflicting duplicate block).
class MalformedInput : public Error {
public:
    using Error::Error;
};

//! A numerical procedure could not produce a trustworthy answer.
class NumericalError : public Error {
public:
    using Error::Error;
};

//! An observed trace contradicts a modelling assumption.
class ModelError : public Error {
public:
    using Error::Error;
};

} // namespace powtopo
