#pragma once

#include <span>
#include <utility>
#include <vector>

namespace token_lab {

// Environment constants. Only r = b/c matters economically; the library keeps
// b and c separate so marginals can be split linearly in (b, c).
struct PopulationParams {
    double rho = 0.5;  // matching probability per period, (0, 1/2]
    double beta = 0.9; // discount factor, (0, 1)
    double b = 2.0;    // benefit per service received
    double c = 1.0;    // cost per service provided

    double r() const { return b / c; }

    // Throws Error{InvalidParams} unless b > c > 0, 0 < rho <= 1/2, 0 < beta < 1.
    void validate() const;

    // c normalized to 1, b = r.
    static PopulationParams normalized(double rho, double beta, double r);
};

// Pure threshold strategy: serve iff holding < K.
struct ThresholdStrategy {
    int K = 0;

    bool serves(int holding) const { return holding < K; }
};

// Population strategy: a mix over at most two adjacent thresholds {K, K+1}.
class PopulationStrategy {
public:
    PopulationStrategy() = default;

    static PopulationStrategy pure(int K);
    // Weight `weight_on_next` on K+1, the rest on K. A weight of 0 or 1
    // collapses to the corresponding pure strategy.
    static PopulationStrategy mix(int K, double weight_on_next);
    // General constructor; validates the adjacency/support/sum invariants.
    static PopulationStrategy from_weights(std::vector<std::pair<int, double>> weights);

    // sigma^gamma(n): fraction of the population serving at holding n.
    double serve_probability(int holding) const;

    int min_threshold() const { return weights_.front().first; }
    int max_threshold() const { return weights_.back().first; }
    bool is_pure() const { return weights_.size() == 1; }
    // Weight on the upper threshold (0 for a pure strategy).
    double upper_weight() const { return is_pure() ? 0.0 : weights_.back().second; }

    // (threshold, weight) pairs, ascending thresholds, zero weights dropped.
    const std::vector<std::pair<int, double>>& weights() const { return weights_; }

    // sigma^gamma(0..max_threshold); the last entry is always 0.
    std::vector<double> service_profile() const;

private:
    std::vector<std::pair<int, double>> weights_{{0, 1.0}};
};

double sigma_gamma(const PopulationStrategy& strategy, int holding);

struct Protocol {
    double alpha = 0.0; // per-capita token supply
    PopulationStrategy strategy;

    // Pi_K = (K/2, sigma_K).
    static Protocol special(int K);
};

struct SteadyState {
    std::vector<double> eta; // holdings 0..max_threshold
    double mu = 0.0;         // eta(0)
    double nu = 0.0;         // sum_k eta(k) (1 - sigma^gamma(k))
    double alpha = 0.0;
    double tilt = 1.0; // y = (1 - mu) / (1 - nu)
    PopulationStrategy strategy;

    double mean() const;
    bool degenerate() const { return mu >= 1.0 || nu >= 1.0; }
};

struct SteadyStateOptions {
    double mean_tolerance = 1e-13;
    double tilt_lo = 1e-12;
    double tilt_hi = 1e12;
    int max_iterations = 400;
};

// Builds a SteadyState (mu, nu, tilt) around a given distribution.
SteadyState summarize(std::vector<double> eta, const PopulationStrategy& strategy);

// Unique invariant token distribution of the protocol. Detailed balance makes
// eta(k) proportional to y^k prod_{j<k} sigma(j); the tilt y is found by
// bisection in log y on the (strictly increasing) mean. rho is validated but
// does not enter the result.
SteadyState invariant_distribution(const Protocol& protocol, double rho,
                                   const SteadyStateOptions& options = {});

// One period of the token-distribution dynamics. Agents at holding 0 cannot
// buy, so their only outflow is by serving. The result is one entry longer
// than the input when mass at the top holding can still move up.
std::vector<double> one_step_update(std::span<const double> eta,
                                    const PopulationStrategy& strategy, double rho);

} // namespace token_lab
