#pragma once

#include "token_lab/equilibrium.hpp"
#include "token_lab/population_model.hpp"

#include <optional>
#include <vector>

namespace token_lab {

// (1 - mu)(1 - nu): fraction of matches that end in a trade.
double efficiency(const SteadyState& steady);

struct EfficiencyBounds {
    double upper_alpha = 0.0; // 1 - 1/(2 ceil(alpha) + 1)
    double upper_K = 0.0;     // (K/(K+1))^2, attained by Pi_K

    double tightest() const { return upper_alpha < upper_K ? upper_alpha : upper_K; }
};

EfficiencyBounds efficiency_bounds(double alpha, int K);

// Every threshold K whose Pi_K is a robust equilibrium lies in [K_L, K_H].
struct ThresholdBounds {
    double K_L = 0.0;
    double K_H = 0.0;

    // Integer search range, clipped below at K = 1. Empty when first() > last().
    int first() const;
    int last() const;
    bool empty() const { return first() > last(); }
    // ceil(log2(K_H - K_L)) + 1, at least 1.
    int iteration_cap() const;
};

ThresholdBounds threshold_bounds(const PopulationParams& params);

struct DesignStep {
    int K = 0;
    EquilibriumClass classification;
};

struct DesignResult {
    int K_star = 0;
    double alpha_star = 0.0;
    double efficiency = 0.0;
    int iterations = 0;
    ThresholdBounds bounds;
    EquilibriumClass classification;
    std::vector<DesignStep> trail;
};

// Bisection over the integer thresholds in [K_L, K_H]: stop at an equilibrium
// Pi_K, move left when M(K-1) < c/beta, right when M(K) > c/beta.
// Throws Error{NoEquilibriumFound} when the range empties.
DesignResult bisection_design(const PopulationParams& params, double tol = kClassificationTolerance);

// Thresholds K in [K_first, K_last] whose Pi_K is a (boundary or robust) equilibrium.
std::vector<int> exhaustive_equilibrium_scan(const PopulationParams& params, int K_first, int K_last,
                                             double tol = kClassificationTolerance);

struct ProtocolCandidate {
    double alpha = 0.0;
    int K = 0;
    double efficiency = 0.0;
    EquilibriumClass classification;
};

struct SearchOptions {
    int alpha_steps = 200; // alpha grid j*K/alpha_steps, j = 1..alpha_steps-1
    int K_min = 1;
    int K_max = 0; // 0: ceil(K_H)
    unsigned threads = 1;
};

struct SearchResult {
    std::optional<ProtocolCandidate> best;         // over the (alpha, K) grid
    std::optional<ProtocolCandidate> best_special; // over Pi_K only
};

// Invariant distributions depend only on (alpha, K), so sweeps over beta or r
// can share one grid.
class SteadyGrid {
public:
    SteadyGrid(int K_max, int alpha_steps, double rho, unsigned threads = 1);

    int K_max() const { return K_max_; }
    int alpha_steps() const { return alpha_steps_; }
    double alpha(int K, int j) const { return static_cast<double>(j) * K / alpha_steps_; }
    const SteadyState& at(int K, int j) const;

private:
    int K_max_;
    int alpha_steps_;
    std::vector<std::vector<SteadyState>> rows_;
};

// Robust equilibria only; ties go to smaller K, then smaller alpha.
SearchResult search_protocols(const PopulationParams& params, const SearchOptions& options,
                              const SteadyGrid* grid = nullptr);

// Throws Error{NoEquilibriumFound} when no robust (alpha, K) exists on the grid.
SearchResult optimal_protocol_search(const PopulationParams& params, const SearchOptions& options = {});

// Rows behind the classification, optimal-vs-special and fixed-threshold sweeps.
struct ClassificationRow {
    double beta = 0.0;
    int K = 0;
    EquilibriumTag tag = EquilibriumTag::NotEquilibrium;
    std::optional<double> mix_weight;
};

struct OptimalRow {
    double beta = 0.0;
    std::optional<ProtocolCandidate> best;
    std::optional<ProtocolCandidate> best_special;
};

struct FixedThresholdRow {
    double beta = 0.0;
    double eff_opt = 0.0;    // 0 when no robust protocol exists
    double eff_fixed = 0.0;  // best robust (alpha, sigma_K) at the fixed K, 0 if none
};

std::vector<double> linear_grid(double lo, double hi, int steps);

std::vector<ClassificationRow> classification_sweep(double alpha, double rho, double r,
                                                    const std::vector<double>& betas, int K_max,
                                                    unsigned threads = 1);

std::vector<OptimalRow> optimal_sweep(double rho, double r, const std::vector<double>& betas,
                                      int alpha_steps = 200, unsigned threads = 1);

std::vector<FixedThresholdRow> fixed_threshold_sweep(double rho, double r, const std::vector<double>& betas,
                                                     int fixed_K, int alpha_steps = 200,
                                                     unsigned threads = 1);

} // namespace token_lab
