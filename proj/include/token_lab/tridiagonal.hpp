#pragma once

#include <span>
#include <vector>

namespace token_lab {

// Solves a tridiagonal system with the forward-elimination/back-substitution
// sweep. Bands all have length n; lower[0] and upper[n-1] are ignored.
// No pivoting: callers must supply a diagonally dominant matrix.
std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs);

} // namespace token_lab
