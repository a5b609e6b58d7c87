#pragma once

#include <stdexcept>
#include <string>

namespace alpharobust {

enum class ErrorKind {
    invalid_argument,
    support_violation,
    degenerate_region,
    parametric_infeasible,
    infeasible_radius,
    no_convergence,
    precondition,
};

const char* to_string(ErrorKind kind);

/// Library error. `kind` lets callers (the CLI in particular) map failures
/// to exit codes without parsing messages.
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

}  // namespace alpharobust
