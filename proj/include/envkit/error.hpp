#pragma once

#include <stdexcept>
#include <string>

namespace envkit {

enum class ErrorKind {
    InvalidArgument,   // bad parameter value (radius <= 0, empty schedule, ...)
    Schema,            // malformed input data (file contents, grid data)
    Io,                // filesystem failures
    Overflow,          // index/node-count overflow
    Sandwich,          // lower > upper where an envelope sandwich is required
    UnknownName,       // unknown catalog identifier
    NonUniformAxis,    // separable kernel requested on a non-uniform axis
};

/// Library-wide exception. `kind` lets callers map failures to exit codes
/// without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace envkit
