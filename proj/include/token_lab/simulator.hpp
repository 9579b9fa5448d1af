#pragma once

#include "token_lab/population_model.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace token_lab {

enum class InitMode { NearUniformSpread, SampleFromInvariant };

std::string to_string(InitMode mode);
InitMode parse_init_mode(const std::string& name); // "spread" | "invariant"

struct SimConfig {
    int n_agents = 10000;
    long steps = 5000;
    std::uint64_t seed = 1;
    Protocol protocol = Protocol::special(4);
    double rho = 0.5;
    long burn_in = 1000;
    InitMode init = InitMode::NearUniformSpread;

    long long total_tokens() const;
};

struct SimReport {
    std::vector<double> empirical_eta; // time-averaged over steps >= burn_in
    std::vector<double> invariant_eta; // analytic target (point mass at 0 for zero supply)
    double l1_distance_to_invariant = 0.0;
    double empirical_efficiency = 0.0; // trades per matched pair after burn-in
    long long trades = 0;               // all steps
    long long total_tokens = 0;
    bool token_conservation_check = true;
    std::string generator = "std::mt19937_64";
    std::uint64_t seed = 0;
    int n_agents = 0;
    long steps = 0;
    long burn_in = 0;
};

struct StepRecord {
    long t = 0;
    long trades = 0;
    double eta0 = 0.0; // fraction holding no tokens
    double etaK = 0.0; // fraction holding exactly the top threshold
};

using StepObserver = std::function<void(const StepRecord&)>;

// Each step draws floor(rho N) disjoint client-server pairs; a trade moves one
// token client -> server iff the client holds a token and the server is below
// its own threshold. Agents of a mixed strategy get a fixed pure threshold.
// Throws Error{InfeasibleAllocation} when the supply exceeds what the
// thresholds can hold.
SimReport run_simulation(const SimConfig& config, const StepObserver& observer = {});

struct DeviationEstimate {
    int threshold = 0;
    double mean = 0.0;
    double standard_error = 0.0;
    int replications = 0;
    int horizon = 0;
};

// Discounted payoff of one tagged agent playing `deviant_threshold` while
// everyone else follows the protocol, averaged over independent replications
// that each start the population from its invariant distribution. Payoffs
// (b, c, beta) come from `payoff`; matching uses config.rho.
DeviationEstimate deviation_payoff_estimate(const SimConfig& config, const PopulationParams& payoff,
                                            int deviant_threshold, int horizon, int replications,
                                            unsigned threads = 1);

} // namespace token_lab
