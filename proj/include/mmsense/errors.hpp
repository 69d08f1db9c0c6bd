#pragma once

#include <stdexcept>
#include <string>

namespace mmsense {

// Error taxonomy shared by all modules. The CLI maps these onto exit codes:
// ConfigError -> 1, DataError/IoError -> 2, NumericError -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

// Rejected input: shapes or dimensions that do not agree.
struct ShapeError : DataError {
    using DataError::DataError;
};

struct IoError : DataError {
    using DataError::DataError;
};

// Divergence or non-finite values during numeric work.
struct NumericError : Error {
    using Error::Error;
};

// Model file loading failures, kept distinct so callers can tell them apart.
struct ModelFormatError : IoError {
    using IoError::IoError;
};

struct ModelVersionError : IoError {
    using IoError::IoError;
};

struct ModelTruncatedError : IoError {
    using IoError::IoError;
};

struct ModelChecksumError : IoError {
    using IoError::IoError;
};

}  // namespace mmsense
