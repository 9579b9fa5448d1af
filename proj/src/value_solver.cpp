#include "token_lab/value_solver.hpp"

#include "token_lab/errors.hpp"
#include "token_lab/tridiagonal.hpp"

#include <cmath>
#include <sstream>

namespace token_lab {

CoefficientTriple coefficients(double rho, double beta, double mu, double nu)
{
    if (!(mu < 1.0) || !(nu < 1.0)) {
        std::ostringstream why;
        why << "degenerate steady state (mu=" << mu << ", nu=" << nu << ")";
        throw Error(ErrorKind::DegenerateState, why.str());
    }
    return CoefficientTriple{
        -(1.0 - nu) * rho * beta,
        1.0 - beta + ((1.0 - nu) + (1.0 - mu)) * rho * beta,
        -(1.0 - mu) * rho * beta,
    };
}

CoefficientTriple coefficients(const PopulationParams& params, const SteadyState& steady)
{
    return coefficients(params.rho, params.beta, steady.mu, steady.nu);
}

double MarginalProfile::marginal(int k) const
{
    if (k < static_cast<int>(M.size()))
        return M[static_cast<std::size_t>(k)];
    return M.back() * std::pow(q, k - K);
}

std::vector<double> marginals_for_rates(int K, double rho, double beta, double b, double c,
                                        double mu, double nu)
{
    if (K < 1)
        throw Error(ErrorKind::InvalidParams, "marginal system needs threshold K >= 1");
    const auto phi = coefficients(rho, beta, mu, nu);
    const auto n = static_cast<std::size_t>(K);

    std::vector<double> lower(n, phi.phi_l), diag(n, phi.phi_c), upper(n, phi.phi_r);
    std::vector<double> rhs(n, 0.0);
    rhs.front() += (1.0 - nu) * rho * b;
    rhs.back() += (1.0 - mu) * rho * c;

    auto M = solve_tridiagonal(lower, diag, upper, rhs);
    M.push_back(phi.above_threshold_ratio() * M.back());
    return M;
}

MarginalProfile solve_marginals(int K, const PopulationParams& params, const SteadyState& steady)
{
    params.validate();
    MarginalProfile out;
    out.K = K;
    out.params = params;
    out.mu = steady.mu;
    out.nu = steady.nu;
    out.M = marginals_for_rates(K, params.rho, params.beta, params.b, params.c, steady.mu, steady.nu);
    out.q = coefficients(params, steady).above_threshold_ratio();
    return out;
}

std::vector<double> values_for_service(std::span<const double> sigma, const PopulationParams& params,
                                       double mu, double nu)
{
    params.validate();
    if (!(mu < 1.0) || !(nu < 1.0))
        throw Error(ErrorKind::DegenerateState, "degenerate steady state");
    if (sigma.empty() || sigma.back() != 0.0)
        throw Error(ErrorKind::InvalidParams, "service profile must end with a non-serving holding");

    const double rho = params.rho, beta = params.beta, b = params.b, c = params.c;
    const std::size_t n = sigma.size() + 1; // holdings 0..L
    std::vector<double> lower(n), diag(n), upper(n), rhs(n);

    // Row k of V = (immediate payoff) + beta * E[V(next holding)], rearranged
    // as -a V(k-1) + (1 - d) V(k) - e V(k+1) = C.
    for (std::size_t k = 0; k < n; ++k) {
        const double s = k < sigma.size() ? sigma[k] : 0.0;
        double a = 0.0, d = 0.0, e = 0.0, C = 0.0;
        if (k > 0) {
            a = rho * (1.0 - nu) * beta;
            d += rho * nu * beta;
            C += rho * (1.0 - nu) * b;
        } else {
            d += rho * beta; // a client with no tokens cannot buy
        }
        e = rho * s * (1.0 - mu) * beta;
        d += rho * s * mu * beta + rho * (1.0 - s) * beta + (1.0 - 2.0 * rho) * beta;
        C -= rho * s * (1.0 - mu) * c;

        lower[k] = -a;
        diag[k] = 1.0 - d;
        upper[k] = -e;
        rhs[k] = C;
    }
    return solve_tridiagonal(lower, diag, upper, rhs);
}

MarginalProfile solve_values(int K, const PopulationParams& params, const SteadyState& steady)
{
    if (K < 1)
        throw Error(ErrorKind::InvalidParams, "value system needs threshold K >= 1");
    std::vector<double> sigma(static_cast<std::size_t>(K) + 1, 1.0);
    sigma.back() = 0.0;

    MarginalProfile out;
    out.K = K;
    out.params = params;
    out.mu = steady.mu;
    out.nu = steady.nu;
    out.V = values_for_service(sigma, params, steady.mu, steady.nu);
    out.q = coefficients(params, steady).above_threshold_ratio();
    out.M.resize(out.V.size() - 1);
    for (std::size_t k = 0; k + 1 < out.V.size(); ++k)
        out.M[k] = out.V[k + 1] - out.V[k];
    return out;
}

MarginalProfile solve_profile(int K, const PopulationParams& params, const SteadyState& steady)
{
    auto out = solve_marginals(K, params, steady);
    out.V = solve_values(K, params, steady).V;
    return out;
}

MarginalProfile value_iteration_oracle(int K, const PopulationParams& params,
                                       const SteadyState& steady, int sweeps)
{
    params.validate();
    const double rho = params.rho, beta = params.beta, b = params.b, c = params.c;
    const double mu = steady.mu, nu = steady.nu;
    const std::size_t n = static_cast<std::size_t>(K) + 2;

    std::vector<double> V(n, 0.0), next(n, 0.0);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (std::size_t k = 0; k < n; ++k) {
            const bool serves = static_cast<int>(k) < K;
            const double stay = beta * V[k];

            // chosen as client
            double as_client = stay;
            if (k > 0)
                as_client = (1.0 - nu) * (b + beta * V[k - 1]) + nu * stay;

            // chosen as server
            double as_server = stay;
            if (serves && k + 1 < n)
                as_server = (1.0 - mu) * (-c + beta * V[k + 1]) + mu * stay;

            next[k] = rho * as_client + rho * as_server + (1.0 - 2.0 * rho) * stay;
        }
        std::swap(V, next);
    }

    MarginalProfile out;
    out.K = K;
    out.params = params;
    out.mu = mu;
    out.nu = nu;
    out.V = V;
    out.M.resize(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k)
        out.M[k] = V[k + 1] - V[k];
    if (mu < 1.0 && nu < 1.0)
        out.q = coefficients(params, steady).above_threshold_ratio();
    return out;
}

} // namespace token_lab
