#include "token_lab/protocol_design.hpp"

#include "token_lab/errors.hpp"
#include "token_lab/parallel.hpp"
#include "token_lab/value_solver.hpp"

#include <algorithm>
#include <cmath>

namespace token_lab {

double efficiency(const SteadyState& steady)
{
    return (1.0 - steady.mu) * (1.0 - steady.nu);
}

EfficiencyBounds efficiency_bounds(double alpha, int K)
{
    const double k = K;
    return EfficiencyBounds{
        1.0 - 1.0 / (2.0 * std::ceil(alpha) + 1.0),
        (k / (k + 1.0)) * (k / (k + 1.0)),
    };
}

int ThresholdBounds::first() const
{
    return std::max(1, static_cast<int>(std::ceil(K_L)));
}

int ThresholdBounds::last() const
{
    return static_cast<int>(std::floor(K_H));
}

int ThresholdBounds::iteration_cap() const
{
    const double width = K_H - K_L;
    if (!(width > 1.0))
        return 1;
    return static_cast<int>(std::ceil(std::log2(width))) + 1;
}

ThresholdBounds threshold_bounds(const PopulationParams& params)
{
    params.validate();
    const double rho = params.rho, beta = params.beta, r = params.r();
    // Both logarithm bases and both arguments are in (0, 1).
    const double base_low = rho * beta / (2.0 * (1.0 - beta) + 2.0 * rho * beta);
    const double base_high = rho * beta / (1.0 - beta + rho * beta);
    ThresholdBounds out;
    out.K_L = std::max(std::log(1.0 / (1.0 + r)) / std::log(base_low) - 1.0, 0.0);
    out.K_H = std::log(1.0 / (2.0 * r)) / std::log(base_high);
    return out;
}

DesignResult bisection_design(const PopulationParams& params, double tol)
{
    DesignResult out;
    out.bounds = threshold_bounds(params);
    int lo = out.bounds.first();
    int hi = out.bounds.last();

    while (lo <= hi) {
        const int K = lo + (hi - lo) / 2;
        ++out.iterations;
        const auto cls = check_equilibrium(Protocol::special(K), params, tol);
        out.trail.push_back({K, cls});
        if (cls.slack_low < -tol) {
            hi = K - 1; // no larger threshold can sustain service up to K'-1
        } else if (cls.slack_high < -tol) {
            lo = K + 1; // no smaller threshold can sustain stopping at K'
        } else {
            out.K_star = K;
            out.alpha_star = K / 2.0;
            out.classification = cls;
            out.efficiency = efficiency(invariant_distribution(Protocol::special(K), params.rho));
            return out;
        }
    }
    throw Error(ErrorKind::NoEquilibriumFound, "no threshold in [K_L, K_H] yields an equilibrium Pi_K");
}

std::vector<int> exhaustive_equilibrium_scan(const PopulationParams& params, int K_first, int K_last,
                                             double tol)
{
    std::vector<int> out;
    for (int K = std::max(1, K_first); K <= K_last; ++K)
        if (check_equilibrium(Protocol::special(K), params, tol).is_equilibrium())
            out.push_back(K);
    return out;
}

SteadyGrid::SteadyGrid(int K_max, int alpha_steps, double rho, unsigned threads)
    : K_max_(K_max), alpha_steps_(alpha_steps), rows_(static_cast<std::size_t>(std::max(K_max, 0)))
{
    if (alpha_steps < 2)
        throw Error(ErrorKind::InvalidParams, "alpha grid needs at least 2 steps");
    parallel_for(rows_.size(), threads, [&](std::size_t i) {
        const int K = static_cast<int>(i) + 1;
        auto& row = rows_[i];
        row.reserve(static_cast<std::size_t>(alpha_steps - 1));
        for (int j = 1; j < alpha_steps; ++j)
            row.push_back(invariant_distribution(Protocol{alpha(K, j), PopulationStrategy::pure(K)}, rho));
    });
}

const SteadyState& SteadyGrid::at(int K, int j) const
{
    return rows_.at(static_cast<std::size_t>(K) - 1).at(static_cast<std::size_t>(j) - 1);
}

namespace {

bool better(const std::optional<ProtocolCandidate>& incumbent, const ProtocolCandidate& c)
{
    return !incumbent || c.efficiency > incumbent->efficiency;
}

} // namespace

SearchResult search_protocols(const PopulationParams& params, const SearchOptions& options,
                              const SteadyGrid* grid)
{
    params.validate();
    const int K_min = std::max(1, options.K_min);
    int K_max = options.K_max;
    if (K_max <= 0)
        K_max = std::max(1, static_cast<int>(std::ceil(threshold_bounds(params).K_H)));

    std::optional<SteadyGrid> own;
    if (!grid || grid->K_max() < K_max || grid->alpha_steps() != options.alpha_steps) {
        own.emplace(K_max, options.alpha_steps, params.rho, options.threads);
        grid = &*own;
    }

    // One slot per (K, j) cell, filled in parallel and reduced in grid order.
    const int steps = options.alpha_steps;
    const int n_K = K_max - K_min + 1;
    std::vector<std::optional<ProtocolCandidate>> cells(static_cast<std::size_t>(std::max(n_K, 0)) *
                                                        static_cast<std::size_t>(steps - 1));
    parallel_for(cells.size(), options.threads, [&](std::size_t idx) {
        const int K = K_min + static_cast<int>(idx / static_cast<std::size_t>(steps - 1));
        const int j = 1 + static_cast<int>(idx % static_cast<std::size_t>(steps - 1));
        const auto& steady = grid->at(K, j);
        const auto cls = check_equilibrium(K, steady, params);
        if (cls.tag == EquilibriumTag::RobustEquilibrium)
            cells[idx] = ProtocolCandidate{grid->alpha(K, j), K, efficiency(steady), cls};
    });

    SearchResult out;
    for (std::size_t idx = 0; idx < cells.size(); ++idx) {
        if (!cells[idx])
            continue;
        const auto& c = *cells[idx];
        if (better(out.best, c))
            out.best = c;
        if (c.alpha == c.K / 2.0 && better(out.best_special, c))
            out.best_special = c;
    }
    return out;
}

SearchResult optimal_protocol_search(const PopulationParams& params, const SearchOptions& options)
{
    auto out = search_protocols(params, options);
    if (!out.best)
        throw Error(ErrorKind::NoEquilibriumFound, "no robust equilibrium protocol on the search grid");
    return out;
}

std::vector<double> linear_grid(double lo, double hi, int steps)
{
    if (steps < 1)
        throw Error(ErrorKind::InvalidParams, "grid needs at least one step");
    std::vector<double> out(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        out[static_cast<std::size_t>(i)] = steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1);
    return out;
}

std::vector<ClassificationRow> classification_sweep(double alpha, double rho, double r,
                                                    const std::vector<double>& betas, int K_max,
                                                    unsigned threads)
{
    // Thresholds that can carry the supply: alpha < K.
    std::vector<int> Ks;
    for (int K = 1; K <= K_max; ++K)
        if (alpha < K)
            Ks.push_back(K);

    std::vector<SteadyState> steadies;
    for (int K : Ks)
        steadies.push_back(invariant_distribution(Protocol{alpha, PopulationStrategy::pure(K)}, rho));

    std::vector<ClassificationRow> rows(betas.size() * Ks.size());
    parallel_for(rows.size(), threads, [&](std::size_t idx) {
        const std::size_t bi = idx / Ks.size();
        const std::size_t ki = idx % Ks.size();
        const auto params = PopulationParams::normalized(rho, betas[bi], r);
        auto& row = rows[idx];
        row.beta = betas[bi];
        row.K = Ks[ki];
        row.tag = check_equilibrium(row.K, steadies[ki], params).tag;
        row.mix_weight = mixed_equilibrium_weight(alpha, row.K, params);
    });
    return rows;
}

namespace {

int sweep_K_max(double rho, double r, const std::vector<double>& betas)
{
    int K_max = 1;
    for (double beta : betas) {
        const auto bounds = threshold_bounds(PopulationParams::normalized(rho, beta, r));
        K_max = std::max(K_max, static_cast<int>(std::ceil(bounds.K_H)));
    }
    return K_max;
}

} // namespace

std::vector<OptimalRow> optimal_sweep(double rho, double r, const std::vector<double>& betas,
                                      int alpha_steps, unsigned threads)
{
    const SteadyGrid grid(sweep_K_max(rho, r, betas), alpha_steps, rho, threads);
    std::vector<OptimalRow> rows;
    for (double beta : betas) {
        SearchOptions options;
        options.alpha_steps = alpha_steps;
        options.threads = threads;
        const auto found = search_protocols(PopulationParams::normalized(rho, beta, r), options, &grid);
        rows.push_back({beta, found.best, found.best_special});
    }
    return rows;
}

std::vector<FixedThresholdRow> fixed_threshold_sweep(double rho, double r, const std::vector<double>& betas,
                                                     int fixed_K, int alpha_steps, unsigned threads)
{
    const SteadyGrid grid(std::max(fixed_K, sweep_K_max(rho, r, betas)), alpha_steps, rho, threads);
    std::vector<FixedThresholdRow> rows;
    for (double beta : betas) {
        const auto params = PopulationParams::normalized(rho, beta, r);
        SearchOptions options;
        options.alpha_steps = alpha_steps;
        options.threads = threads;
        const auto all = search_protocols(params, options, &grid);

        options.K_min = fixed_K;
        options.K_max = fixed_K;
        const auto fixed = search_protocols(params, options, &grid);

        FixedThresholdRow row;
        row.beta = beta;
        row.eff_fixed = fixed.best ? fixed.best->efficiency : 0.0;
        // the fixed threshold may sit above the default unconstrained range
        row.eff_opt = std::max(all.best ? all.best->efficiency : 0.0, row.eff_fixed);
        rows.push_back(row);
    }
    return rows;
}

} // namespace token_lab
