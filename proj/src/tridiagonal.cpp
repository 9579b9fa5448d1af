#include "token_lab/tridiagonal.hpp"

#include <cassert>

namespace token_lab {

std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs)
{
    const std::size_t n = diag.size();
    assert(lower.size() == n && upper.size() == n && rhs.size() == n);
    if (n == 0)
        return {};

    std::vector<double> c_prime(n, 0.0);
    std::vector<double> x(n);
    c_prime[0] = n > 1 ? upper[0] / diag[0] : 0.0;
    x[0] = rhs[0] / diag[0];

    // Forward sweep
    for (std::size_t i = 1; i < n; ++i) {
        const double factor = 1.0 / (diag[i] - lower[i] * c_prime[i - 1]);
        c_prime[i] = i + 1 < n ? upper[i] * factor : 0.0;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) * factor;
    }

    // Back substitution
    for (std::size_t i = n - 1; i > 0; --i)
        x[i - 1] -= c_prime[i - 1] * x[i];
    return x;
}

} // namespace token_lab
