#pragma once

#include <stdexcept>
#include <string>

namespace cwpower {

/// NaN/Inf encountered in a loss, gradient or parameter.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Base of every corpus/checkpoint decoding failure.
class FileError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public FileError {
public:
    using FileError::FileError;
};

class VersionError : public FileError {
public:
    using FileError::FileError;
};

class ChecksumError : public FileError {
public:
    using FileError::FileError;
};

class TruncatedError : public FileError {
public:
    using FileError::FileError;
};

}  // namespace cwpower
