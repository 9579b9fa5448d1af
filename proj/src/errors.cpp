#include "token_lab/errors.hpp"

namespace token_lab {

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InvalidSupply: return "InvalidSupply";
    case ErrorKind::DegenerateState: return "DegenerateState";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NoRoot: return "NoRoot";
    case ErrorKind::NoEquilibriumFound: return "NoEquilibriumFound";
    case ErrorKind::InfeasibleAllocation: return "InfeasibleAllocation";
    }
    return "Unknown";
}

} // namespace token_lab
