#include "token_lab/population_model.hpp"

#include "token_lab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace token_lab {

void PopulationParams::validate() const
{
    std::ostringstream why;
    if (!(rho > 0.0 && rho <= 0.5))
        why << "rho must lie in (0, 1/2], got " << rho;
    else if (!(beta > 0.0 && beta < 1.0))
        why << "beta must lie in (0, 1), got " << beta;
    else if (!(c > 0.0))
        why << "cost c must be positive, got " << c;
    else if (!(b > c))
        why << "benefit must exceed cost (b=" << b << ", c=" << c << ")";
    else
        return;
    throw Error(ErrorKind::InvalidParams, why.str());
}

PopulationParams PopulationParams::normalized(double rho, double beta, double r)
{
    return PopulationParams{rho, beta, r, 1.0};
}

PopulationStrategy PopulationStrategy::pure(int K)
{
    return from_weights({{K, 1.0}});
}

PopulationStrategy PopulationStrategy::mix(int K, double weight_on_next)
{
    return from_weights({{K, 1.0 - weight_on_next}, {K + 1, weight_on_next}});
}

PopulationStrategy PopulationStrategy::from_weights(std::vector<std::pair<int, double>> weights)
{
    double total = 0.0;
    for (auto const& [K, w] : weights) {
        if (K < 0)
            throw Error(ErrorKind::InvalidParams, "thresholds must be non-negative");
        if (!(w >= 0.0 && w <= 1.0))
            throw Error(ErrorKind::InvalidParams, "strategy weights must lie in [0, 1]");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw Error(ErrorKind::InvalidParams, "strategy weights must sum to 1");

    std::erase_if(weights, [](auto const& kw) { return kw.second == 0.0; });
    std::sort(weights.begin(), weights.end());
    if (weights.empty() || weights.size() > 2)
        throw Error(ErrorKind::InvalidParams, "strategy must mix over one or two thresholds");
    if (weights.size() == 2 && weights[1].first != weights[0].first + 1)
        throw Error(ErrorKind::InvalidParams, "mixed thresholds must be adjacent");

    PopulationStrategy s;
    s.weights_ = std::move(weights);
    return s;
}

double PopulationStrategy::serve_probability(int holding) const
{
    double p = 0.0;
    for (auto const& [K, w] : weights_)
        if (holding < K)
            p += w;
    return p;
}

std::vector<double> PopulationStrategy::service_profile() const
{
    std::vector<double> sigma(static_cast<std::size_t>(max_threshold()) + 1);
    for (std::size_t n = 0; n < sigma.size(); ++n)
        sigma[n] = serve_probability(static_cast<int>(n));
    return sigma;
}

double sigma_gamma(const PopulationStrategy& strategy, int holding)
{
    return strategy.serve_probability(holding);
}

Protocol Protocol::special(int K)
{
    return Protocol{K / 2.0, PopulationStrategy::pure(K)};
}

double SteadyState::mean() const
{
    double m = 0.0;
    for (std::size_t k = 0; k < eta.size(); ++k)
        m += static_cast<double>(k) * eta[k];
    return m;
}

SteadyState summarize(std::vector<double> eta, const PopulationStrategy& strategy)
{
    SteadyState s;
    s.strategy = strategy;
    s.mu = eta.empty() ? 1.0 : eta[0];
    s.nu = 0.0;
    for (std::size_t k = 0; k < eta.size(); ++k)
        s.nu += eta[k] * (1.0 - strategy.serve_probability(static_cast<int>(k)));
    s.eta = std::move(eta);
    s.alpha = s.mean();
    s.tilt = s.nu < 1.0 ? (1.0 - s.mu) / (1.0 - s.nu) : std::numeric_limits<double>::infinity();
    return s;
}

namespace {

// log prod_{j<k} sigma(j) for k = 0..Kmax; -inf past the first zero.
std::vector<double> log_service_products(const std::vector<double>& sigma)
{
    std::vector<double> lp(sigma.size(), 0.0);
    for (std::size_t k = 1; k < sigma.size(); ++k)
        lp[k] = lp[k - 1] + std::log(sigma[k - 1]);
    return lp;
}

std::vector<double> tilted(const std::vector<double>& log_products, double log_tilt)
{
    std::vector<double> w(log_products.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < w.size(); ++k) {
        w[k] = log_products[k] + log_tilt * static_cast<double>(k);
        top = std::max(top, w[k]);
    }
    double total = 0.0;
    for (auto& x : w) {
        x = std::exp(x - top);
        total += x;
    }
    for (auto& x : w)
        x /= total;
    return w;
}

double mean_of(const std::vector<double>& eta)
{
    double m = 0.0;
    for (std::size_t k = 0; k < eta.size(); ++k)
        m += static_cast<double>(k) * eta[k];
    return m;
}

} // namespace

SteadyState invariant_distribution(const Protocol& protocol, double rho,
                                   const SteadyStateOptions& options)
{
    if (!(rho > 0.0 && rho <= 0.5))
        throw Error(ErrorKind::InvalidParams, "rho must lie in (0, 1/2]");

    const auto& strategy = protocol.strategy;
    const double alpha = protocol.alpha;
    const int top = strategy.max_threshold();
    if (!(alpha > 0.0) || !(alpha < static_cast<double>(top))) {
        std::ostringstream why;
        why << "token supply alpha=" << alpha << " must lie in (0, " << top << ")";
        throw Error(ErrorKind::InvalidSupply, why.str());
    }

    if (strategy.is_pure() && alpha == top / 2.0) {
        std::vector<double> eta(static_cast<std::size_t>(top) + 1, 1.0 / (top + 1));
        auto s = summarize(std::move(eta), strategy);
        s.alpha = alpha;
        s.tilt = 1.0;
        return s;
    }

    const auto log_products = log_service_products(strategy.service_profile());
    double lo = std::log(options.tilt_lo);
    double hi = std::log(options.tilt_hi);
    if (mean_of(tilted(log_products, lo)) > alpha || mean_of(tilted(log_products, hi)) < alpha)
        throw Error(ErrorKind::NoConvergence, "tilt bracket does not contain the target mean");

    double mid = 0.5 * (lo + hi);
    std::vector<double> eta = tilted(log_products, mid);
    for (int it = 0; it < options.max_iterations; ++it) {
        const double m = mean_of(eta);
        if (std::abs(m - alpha) <= options.mean_tolerance)
            break;
        (m < alpha ? lo : hi) = mid;
        const double next = 0.5 * (lo + hi);
        if (next == mid)
            break;
        mid = next;
        eta = tilted(log_products, mid);
    }
    if (std::abs(mean_of(eta) - alpha) > 1e-9)
        throw Error(ErrorKind::NoConvergence, "tilt bisection failed to match the token supply");

    auto s = summarize(std::move(eta), strategy);
    s.alpha = alpha;
    s.tilt = std::exp(mid);
    return s;
}

std::vector<double> one_step_update(std::span<const double> eta,
                                    const PopulationStrategy& strategy, double rho)
{
    const std::size_t n = eta.size();
    if (n == 0)
        return {};

    std::vector<double> sigma(n);
    for (std::size_t k = 0; k < n; ++k)
        sigma[k] = strategy.serve_probability(static_cast<int>(k));

    const double mu = eta[0];
    double nu = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        nu += eta[k] * (1.0 - sigma[k]);

    const double up = rho * (1.0 - mu);   // chance a server meets a paying client
    const double down = rho * (1.0 - nu); // chance a client meets a willing server

    const bool grows = eta[n - 1] * sigma[n - 1] > 0.0 && up > 0.0;
    std::vector<double> next(grows ? n + 1 : n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        if (eta[k] == 0.0)
            continue;
        const double gain = up * sigma[k];
        const double spend = k > 0 ? down : 0.0;
        next[k] += eta[k] * (1.0 - gain - spend);
        if (gain > 0.0)
            next[k + 1] += eta[k] * gain;
        if (spend > 0.0)
            next[k - 1] += eta[k] * spend;
    }
    return next;
}

} // namespace token_lab
