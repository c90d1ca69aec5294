#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evcharge {

/// Error categories. The CLI maps each one onto a distinct exit code.
enum class ErrorKind {
    InvalidArgument,
    Config,
    Io,
    Solver,
    Infeasible,
};

std::string_view to_string(ErrorKind kind);

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

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

} // namespace evcharge
