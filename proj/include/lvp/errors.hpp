#pragma once

#include <stdexcept>
#include <string>

namespace lvp {

// Error taxonomy; the CLI maps each kind to a stable exit code.
enum class ErrorKind {
    Config,        // bad shapes, bad hyperparameters, unknown config keys
    Degenerate,    // structurally valid input that yields an empty result
    Codec,         // non-finite values or impossible coding requests
    CorruptStream, // truncated or damaged bitstream / container
    HashMismatch,  // container was produced with a different model
    Training,      // divergence, non-finite gradients
    Io,            // file system / format parsing
    Usage,         // CLI misuse
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) {
    throw Error(kind, msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) raise(kind, msg);
}

} // namespace lvp
