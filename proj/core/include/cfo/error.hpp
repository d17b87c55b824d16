#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfo {

enum class ErrorKind {
    Domain,          // argument outside the mathematical domain of an operation
    Length,          // sequence length precondition violated
    Shape,           // tensor / model shape mismatch
    Unsupported,     // e.g. FSK2 passed to a linear mapper
    Degenerate,      // zero-power frames, zero correlation, undersized batches
    State,           // missing or stale forward cache
    Divergence,      // non-finite loss or gradient during training
    Format,          // corrupt or truncated file
    Validation,      // invalid dataset / experiment configuration
    Io,
    Usage,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace cfo
