#pragma once

#include <stdexcept>
#include <string>

namespace somcm {

/// Classification of library failures. The CLI maps these onto exit codes.
enum class ErrorKind {
    ContractViolation,   // caller broke a precondition (e.g. dimension mismatch)
    InvalidInput,        // malformed or non-finite data
    InsufficientData,    // not enough observations for the requested operation
    DegenerateInput,     // mathematically undefined case (zero vector, ...)
    InvalidBaseline,     // baseline constants unusable (DM_delta <= 0, ...)
    SingularCovariance,  // covariance not invertible within the guard
    EmptyTrainingSet,    // no rows survived cleaning / normalisation
    ConfigError,         // bad or unknown configuration key/value
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) {
        throw Error(kind, what);
    }
}

}  // namespace somcm
