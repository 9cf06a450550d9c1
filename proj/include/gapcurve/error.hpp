#pragma once

#include <stdexcept>
#include <string>

namespace gapcurve {

/// Failure categories; the CLI maps them onto process exit codes.
enum class ErrorKind {
    Domain = 1,      // invalid input data or precondition violation
    Parse = 2,       // malformed file
    Resolution = 3,  // grid cannot resolve the requested computation
    Divergence = 4,  // iterative solver left its basin
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

}  // namespace gapcurve
