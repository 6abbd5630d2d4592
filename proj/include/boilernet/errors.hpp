#pragma once

#include <stdexcept>
#include <string>

namespace boilernet {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input bytes could not be decoded into text at all.
struct DecodingError : Error {
    using Error::Error;
};

// A page yielded zero text blocks and cannot be used.
struct EmptyPageError : Error {
    using Error::Error;
};

// Invalid parameter values (k=0, bad threshold, ...).
struct ParameterError : Error {
    using Error::Error;
};

// Training corpus is missing one of the two classes.
struct DegenerateCorpusError : Error {
    using Error::Error;
};

// File I/O failures (unreadable, unwritable).
struct IoError : Error {
    using Error::Error;
};

// Parameter/vocabulary file problems, each kept distinct.
struct FormatError : Error {
    using Error::Error;
};
struct VersionMismatchError : FormatError {
    using FormatError::FormatError;
};
struct ShapeMismatchError : FormatError {
    using FormatError::FormatError;
};
struct TruncatedFileError : FormatError {
    using FormatError::FormatError;
};

// Non-finite values encountered during training or inference.
struct NumericalError : Error {
    using Error::Error;
};

} // namespace boilernet
