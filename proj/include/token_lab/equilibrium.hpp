#pragma once

#include "token_lab/population_model.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace token_lab {

enum class EquilibriumTag { NotEquilibrium, BoundaryEquilibrium, RobustEquilibrium };

std::string_view to_string(EquilibriumTag tag) noexcept;

// slack_low = M(K-1) - c/beta (willing to keep serving up to K-1),
// slack_high = c/beta - M(K) (willing to stop at K).
struct EquilibriumClass {
    EquilibriumTag tag = EquilibriumTag::NotEquilibrium;
    double slack_low = 0.0;
    double slack_high = 0.0;

    bool is_equilibrium() const { return tag != EquilibriumTag::NotEquilibrium; }
};

inline constexpr double kClassificationTolerance = 1e-9;
inline constexpr double kRootTolerance = 1e-10;

EquilibriumClass classify_slacks(double slack_low, double slack_high,
                                 double tol = kClassificationTolerance);

// Requires a pure threshold protocol with K >= 1. Robust iff both slacks are
// strictly positive: the equilibrium set in beta (and in r) is a closed
// interval bounded by strictly monotone roots, so strict slack is interior.
EquilibriumClass check_equilibrium(const Protocol& protocol, const PopulationParams& params,
                                   double tol = kClassificationTolerance);
EquilibriumClass check_equilibrium(int K, const SteadyState& steady, const PopulationParams& params,
                                   double tol = kClassificationTolerance);

enum class IntervalKind { Beta, R };

struct ParameterInterval {
    double lo = 0.0;
    double hi = 0.0;
    IntervalKind kind = IntervalKind::Beta;
};

// [beta_L, beta_H] for a pure threshold protocol at benefit/cost ratio r
// (c = 1, b = r). beta_L is the root of M(K-1) = c/beta, beta_H the root of
// M(K) = c/beta; both sides are monotone in beta, so plain bisection on (0, 1).
ParameterInterval beta_interval(const Protocol& protocol, double rho, double r,
                                double tol = kRootTolerance);

// [r_L, r_H] at fixed beta, in closed form from the (b, c) linearity of M.
ParameterInterval r_interval(const Protocol& protocol, double rho, double beta);

struct IntervalRow {
    int K = 0;
    ParameterInterval interval;
};

struct InterleavingTable {
    std::vector<IntervalRow> rows;   // Pi_1 .. Pi_Kmax
    bool strictly_interleaved = true; // lo(K-1) < lo(K) < hi(K-1) < hi(K) for all K
    bool lower_increasing = true;
};

InterleavingTable beta_interleaving(int K_max, double rho, double r, double tol = kRootTolerance);
InterleavingTable r_interleaving(int K_max, double rho, double beta);

// Weight w on threshold K+1 of the mix {K: 1-w, K+1: w} at which an
// individual is exactly indifferent at holding K against the mixed steady
// state, with M(K-1) >= c/beta. std::nullopt when the indifference residual
// does not change sign over the admissible weights.
std::optional<double> mixed_equilibrium_weight(double alpha, int K, const PopulationParams& params,
                                               double tol = kClassificationTolerance);

// M(K) - c/beta for the pure-K individual against the mix-w steady state.
double mixed_indifference_residual(double alpha, int K, double w, const PopulationParams& params);

} // namespace token_lab
