#pragma once

#include <stdexcept>
#include <string>

namespace netqos {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

struct MissingFile : IoError {
    explicit MissingFile(const std::string& path) : IoError("missing file: " + path) {}
};

struct MalformedRow : Error {
    MalformedRow(const std::string& file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what) {}
};

struct InvariantViolation : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct DegenerateSeries : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct EmptyTrace : EmptyInput {
    using EmptyInput::EmptyInput;
};

struct EmptyTrainSet : EmptyInput {
    using EmptyInput::EmptyInput;
};

struct TooFewExamples : Error {
    using Error::Error;
};

struct KTooLarge : Error {
    using Error::Error;
};

struct InsufficientHistory : Error {
    using Error::Error;
};

struct UnknownCell : Error {
    using Error::Error;
};

struct NoQosSamples : Error {
    using Error::Error;
};

struct BadHyper : Error {
    using Error::Error;
};

struct KindUnsupported : Error {
    using Error::Error;
};

struct ConfigMismatch : Error {
    using Error::Error;
};

} // namespace netqos
