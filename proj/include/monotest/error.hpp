#pragma once

#include <stdexcept>
#include <string>

namespace monotest {

/// Coarse classification used by the CLI to pick an exit code.
enum class ErrorKind {
    invalid_argument,    ///< caller violated a precondition
    data,                ///< malformed or insufficient input data
    degenerate_variance, ///< every scale has (numerically) zero variance
    rank_deficient,      ///< a series regression lost full column rank
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::invalid_argument, what);
}

} // namespace detail
} // namespace monotest
