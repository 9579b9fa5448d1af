#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace token_lab {

enum class ErrorKind {
    InvalidParams,
    InvalidSupply,
    DegenerateState,
    NoConvergence,
    NoRoot,
    NoEquilibriumFound,
    InfeasibleAllocation,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every solver failure surfaces as this exception; `kind()` names the failure
// mode so callers (and the CLI) can report it without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace token_lab
