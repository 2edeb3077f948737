#pragma once

#include <stdexcept>
#include <string>

namespace lednet {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands disagree in shape or length.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A scalar argument lies outside its admissible range.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Text input (manifest, history, config, split file) is malformed.
class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A file exists but does not decode as the expected format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Model or experiment configuration is invalid or inconsistent.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Dataset is empty or otherwise unusable for the requested step.
class DataError : public Error {
public:
    using Error::Error;
};

/// Optimization diverged (non-finite loss).
class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace lednet
