#pragma once

#include <stdexcept>
#include <cstddef>
#include <string>
#include <vector>

namespace mmfusion {

// Every failure the library reports derives from Error. Subclasses map onto
// the CLI's exit codes (see tools/cli.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

/// A caller broke an API precondition (e.g. backward on a non-scalar).
class ContractError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class VocabularyError : public Error {
public:
    using Error::Error;
};

/// Malformed input text. Message carries the 1-based line number when known.
class ParseError : public Error {
public:
    using Error::Error;
};

class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class PersistenceError : public Error {
public:
    using Error::Error;
};

class VariantMismatchError : public PersistenceError {
public:
    using PersistenceError::PersistenceError;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

} // namespace mmfusion
