#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trackwatch {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes: ValidationError/ParseError/DegenerateInput/PreconditionError -> 2,
// IoError -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// Input had the wrong shape for the operation (too few points, frame smaller
// than the window, ...).
class DegenerateInput : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class PreconditionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t line)
        : ValidationError(what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Model file could not be decoded; offset is the byte position reported by
// the decoder (0 when unknown).
class LoadError : public ValidationError {
public:
    LoadError(const std::string& what, std::size_t offset)
        : ValidationError(what), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace trackwatch
