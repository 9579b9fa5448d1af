#include "token_lab/equilibrium.hpp"

#include "token_lab/errors.hpp"
#include "token_lab/value_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace token_lab {

std::string_view to_string(EquilibriumTag tag) noexcept
{
    switch (tag) {
    case EquilibriumTag::NotEquilibrium: return "NotEquilibrium";
    case EquilibriumTag::BoundaryEquilibrium: return "BoundaryEquilibrium";
    case EquilibriumTag::RobustEquilibrium: return "RobustEquilibrium";
    }
    return "Unknown";
}

EquilibriumClass classify_slacks(double slack_low, double slack_high, double tol)
{
    EquilibriumClass out{EquilibriumTag::NotEquilibrium, slack_low, slack_high};
    if (slack_low > tol && slack_high > tol)
        out.tag = EquilibriumTag::RobustEquilibrium;
    else if (slack_low >= -tol && slack_high >= -tol)
        out.tag = EquilibriumTag::BoundaryEquilibrium;
    return out;
}

namespace {

int pure_threshold(const Protocol& protocol)
{
    if (!protocol.strategy.is_pure())
        throw Error(ErrorKind::InvalidParams, "protocol must use a pure threshold strategy");
    const int K = protocol.strategy.max_threshold();
    if (K < 1)
        throw Error(ErrorKind::InvalidParams, "threshold must be at least 1");
    return K;
}

// Root of an increasing function on [lo, hi], sign-checked at both ends.
double increasing_root(const std::function<double(double)>& f, double lo, double hi, double tol)
{
    if (f(lo) >= 0.0 || f(hi) <= 0.0)
        throw Error(ErrorKind::NoRoot, "equilibrium condition does not change sign on (0, 1)");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

constexpr double kBetaFloor = 1e-9;
constexpr double kBetaCeil = 1.0 - 1e-12;

} // namespace

EquilibriumClass check_equilibrium(int K, const SteadyState& steady, const PopulationParams& params,
                                   double tol)
{
    const auto profile = solve_marginals(K, params, steady);
    const double bar = params.c / params.beta;
    return classify_slacks(profile.M[static_cast<std::size_t>(K) - 1] - bar,
                           bar - profile.M[static_cast<std::size_t>(K)], tol);
}

EquilibriumClass check_equilibrium(const Protocol& protocol, const PopulationParams& params, double tol)
{
    const int K = pure_threshold(protocol);
    params.validate();
    const auto steady = invariant_distribution(protocol, params.rho);
    return check_equilibrium(K, steady, params, tol);
}

ParameterInterval beta_interval(const Protocol& protocol, double rho, double r, double tol)
{
    const int K = pure_threshold(protocol);
    if (!(r > 1.0))
        throw Error(ErrorKind::InvalidParams, "benefit/cost ratio must exceed 1");
    const auto steady = invariant_distribution(protocol, rho);
    const double mu = steady.mu, nu = steady.nu;
    const auto k = static_cast<std::size_t>(K);

    // F(beta) = M(K-1) - c/beta
    auto F = [&](double beta) {
        return marginals_for_rates(K, rho, beta, r, 1.0, mu, nu)[k - 1] - 1.0 / beta;
    };
    // G(beta) = M(K) - c/beta, i.e. M(K-1) against the scaled bar
    auto G = [&](double beta) {
        return marginals_for_rates(K, rho, beta, r, 1.0, mu, nu)[k] - 1.0 / beta;
    };

    ParameterInterval out;
    out.kind = IntervalKind::Beta;
    out.lo = increasing_root(F, kBetaFloor, kBetaCeil, tol);
    out.hi = increasing_root(G, kBetaFloor, kBetaCeil, tol);
    return out;
}

ParameterInterval r_interval(const Protocol& protocol, double rho, double beta)
{
    const int K = pure_threshold(protocol);
    if (!(beta > 0.0 && beta < 1.0))
        throw Error(ErrorKind::InvalidParams, "beta must lie in (0, 1)");
    const auto steady = invariant_distribution(protocol, rho);
    const auto k = static_cast<std::size_t>(K);

    const auto A = marginals_for_rates(K, rho, beta, 1.0, 0.0, steady.mu, steady.nu);
    const auto B = marginals_for_rates(K, rho, beta, 0.0, 1.0, steady.mu, steady.nu);
    const double q = coefficients(rho, beta, steady.mu, steady.nu).above_threshold_ratio();

    ParameterInterval out;
    out.kind = IntervalKind::R;
    out.lo = (1.0 / beta - B[k - 1]) / A[k - 1];
    out.hi = (1.0 / (q * beta) - B[k - 1]) / A[k - 1];
    return out;
}

namespace {

InterleavingTable check_chain(std::vector<IntervalRow> rows)
{
    InterleavingTable table;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& prev = rows[i - 1].interval;
        const auto& cur = rows[i].interval;
        if (!(prev.lo < cur.lo && cur.lo < prev.hi && prev.hi < cur.hi))
            table.strictly_interleaved = false;
        if (!(prev.lo < cur.lo))
            table.lower_increasing = false;
    }
    table.rows = std::move(rows);
    return table;
}

} // namespace

InterleavingTable beta_interleaving(int K_max, double rho, double r, double tol)
{
    std::vector<IntervalRow> rows;
    for (int K = 1; K <= K_max; ++K)
        rows.push_back({K, beta_interval(Protocol::special(K), rho, r, tol)});
    return check_chain(std::move(rows));
}

InterleavingTable r_interleaving(int K_max, double rho, double beta)
{
    std::vector<IntervalRow> rows;
    for (int K = 1; K <= K_max; ++K)
        rows.push_back({K, r_interval(Protocol::special(K), rho, beta)});
    return check_chain(std::move(rows));
}

namespace {

struct MixEval {
    double residual;   // M(K) - c/beta
    double slack_low;  // M(K-1) - c/beta
};

MixEval evaluate_mix(double alpha, int K, double w, const PopulationParams& params)
{
    const Protocol protocol{alpha, PopulationStrategy::mix(K, w)};
    const auto steady = invariant_distribution(protocol, params.rho);
    const auto profile = solve_marginals(K, params, steady);
    const double bar = params.c / params.beta;
    const auto k = static_cast<std::size_t>(K);
    return {profile.M[k] - bar, profile.M[k - 1] - bar};
}

// Smallest weight with a bounded-support invariant distribution.
constexpr double kMinUpperWeight = 1e-6;

} // namespace

double mixed_indifference_residual(double alpha, int K, double w, const PopulationParams& params)
{
    return evaluate_mix(alpha, K, w, params).residual;
}

std::optional<double> mixed_equilibrium_weight(double alpha, int K, const PopulationParams& params,
                                               double tol)
{
    params.validate();
    if (K < 1)
        throw Error(ErrorKind::InvalidParams, "threshold must be at least 1");
    if (!(alpha > 0.0) || !(alpha < K + 1.0))
        throw Error(ErrorKind::InvalidSupply, "token supply must lie in (0, K+1)");

    double lo = alpha < K ? 0.0 : kMinUpperWeight;
    double hi = 1.0;
    const auto at_lo = evaluate_mix(alpha, K, lo, params);
    const auto at_hi = evaluate_mix(alpha, K, hi, params);

    auto accept = [&](double w, const MixEval& e) -> std::optional<double> {
        if (e.slack_low >= -tol)
            return w;
        return std::nullopt;
    };
    if (std::abs(at_lo.residual) <= tol)
        return accept(lo, at_lo);
    if (std::abs(at_hi.residual) <= tol)
        return accept(hi, at_hi);
    if ((at_lo.residual > 0.0) == (at_hi.residual > 0.0))
        return std::nullopt;

    const bool rising = at_lo.residual < 0.0;
    MixEval mid_eval = at_lo;
    double mid = lo;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        mid_eval = evaluate_mix(alpha, K, mid, params);
        if (std::abs(mid_eval.residual) <= 1e-13)
            break;
        ((mid_eval.residual < 0.0) == rising ? lo : hi) = mid;
    }
    if (std::abs(mid_eval.residual) > tol)
        return std::nullopt;
    return accept(mid, mid_eval);
}

} // namespace token_lab
