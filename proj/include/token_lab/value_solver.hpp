#pragma once

#include "token_lab/population_model.hpp"

#include <span>
#include <vector>

namespace token_lab {

// Auxiliary coefficients of the marginal-utility recursion
//   phi_l M(k-1) + phi_c M(k) + phi_r M(k+1) = 0   (interior rows).
struct CoefficientTriple {
    double phi_l = 0.0;
    double phi_c = 0.0;
    double phi_r = 0.0;

    // q = -phi_l / (phi_c + phi_r): M(k) = q M(k-1) above the threshold.
    double above_threshold_ratio() const { return -phi_l / (phi_c + phi_r); }
};

// Throws Error{DegenerateState} if mu >= 1 or nu >= 1.
CoefficientTriple coefficients(double rho, double beta, double mu, double nu);
CoefficientTriple coefficients(const PopulationParams& params, const SteadyState& steady);

struct MarginalProfile {
    int K = 0;
    std::vector<double> M; // M(0..K), empty if only values were requested
    std::vector<double> V; // V(0..K+1), empty if only marginals were requested
    PopulationParams params;
    double mu = 0.0;
    double nu = 0.0;
    double q = 0.0; // above-threshold decay ratio

    // M(k) for any k >= 0; beyond K this extends M(K) geometrically by q.
    double marginal(int k) const;
};

// Marginals M(0..K) of the pure threshold-K strategy at fixed (mu, nu) for
// arbitrary (b, c). No economic validation: used for linear splits in (b, c).
std::vector<double> marginals_for_rates(int K, double rho, double beta, double b, double c,
                                        double mu, double nu);

// K x K tridiagonal system for M(0..K-1), plus M(K) from the above-threshold
// recursion. Requires K >= 1; the never-serve strategy has no marginal system.
MarginalProfile solve_marginals(int K, const PopulationParams& params, const SteadyState& steady);

// Values V(0..K+1) from a direct solve of the Bellman evaluation equations,
// with M filled from differences.
MarginalProfile solve_values(int K, const PopulationParams& params, const SteadyState& steady);

// Same, for a per-holding service probability sigma(0..L-1) with sigma(L-1) = 0.
// V is returned on holdings 0..L.
std::vector<double> values_for_service(std::span<const double> sigma, const PopulationParams& params,
                                       double mu, double nu);

// Both M (tridiagonal route) and V (value route) populated.
MarginalProfile solve_profile(int K, const PopulationParams& params, const SteadyState& steady);

// Independent check on solve_values: Jacobi iteration of the Bellman
// evaluation operator from V = 0 on holdings 0..K+1. Converges with modulus
// beta, so ceil(log(tol) / log(beta)) sweeps reach tolerance tol relative to
// b / (1 - beta).
MarginalProfile value_iteration_oracle(int K, const PopulationParams& params,
                                       const SteadyState& steady, int sweeps);

} // namespace token_lab
