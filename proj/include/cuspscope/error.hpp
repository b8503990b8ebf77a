#pragma once

#include <stdexcept>
#include <string>

namespace cuspscope {

enum class ErrorKind {
    config,
    unsupported_dimension,
    precondition,
    inadmissible,
    quadrature,
    out_of_support,
    unresolvable,
    insufficient_samples,
    degenerate,
    io,
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::unsupported_dimension: return "unsupported-dimension";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::inadmissible: return "inadmissible";
    case ErrorKind::quadrature: return "quadrature-non-convergence";
    case ErrorKind::out_of_support: return "out-of-support";
    case ErrorKind::unresolvable: return "unresolvable";
    case ErrorKind::insufficient_samples: return "insufficient-samples";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    const char* kind_name() const noexcept { return error_kind_name(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

} // namespace cuspscope
