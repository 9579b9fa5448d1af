#include "token_lab/simulator.hpp"

#include "token_lab/errors.hpp"
#include "token_lab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace token_lab {

std::string to_string(InitMode mode)
{
    return mode == InitMode::NearUniformSpread ? "spread" : "invariant";
}

InitMode parse_init_mode(const std::string& name)
{
    if (name == "spread")
        return InitMode::NearUniformSpread;
    if (name == "invariant")
        return InitMode::SampleFromInvariant;
    throw Error(ErrorKind::InvalidParams, "init mode must be 'spread' or 'invariant'");
}

long long SimConfig::total_tokens() const
{
    return std::llround(protocol.alpha * n_agents);
}

namespace {

using Engine = std::mt19937_64;
__extension__ using u128 = unsigned __int128;

// Uniform integer in [0, n) by multiply-and-reject, independent of the
// standard library's distribution implementations.
std::uint64_t bounded(Engine& rng, std::uint64_t n)
{
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const u128 m = static_cast<u128>(rng()) * n;
        if (static_cast<std::uint64_t>(m) >= threshold)
            return static_cast<std::uint64_t>(m >> 64);
    }
}

double unit(Engine& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

struct Population {
    std::vector<int> holdings;
    std::vector<int> thresholds;
    std::vector<std::uint32_t> order; // persistent permutation for matching
    int pairs = 0;
};

std::vector<int> assign_thresholds(const PopulationStrategy& strategy, int n)
{
    std::vector<int> out(static_cast<std::size_t>(n), strategy.min_threshold());
    if (!strategy.is_pure()) {
        const auto upper = static_cast<std::size_t>(std::llround(strategy.upper_weight() * n));
        std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(upper), strategy.max_threshold());
    }
    return out;
}

long long capacity(const std::vector<int>& thresholds)
{
    return std::accumulate(thresholds.begin(), thresholds.end(), 0LL);
}

std::vector<double> analytic_target(const SimConfig& config)
{
    const long long tokens = config.total_tokens();
    const auto thresholds = assign_thresholds(config.protocol.strategy, std::max(config.n_agents, 0));
    if (tokens < 0 || tokens > capacity(thresholds))
        throw Error(ErrorKind::InfeasibleAllocation, "token supply exceeds what the thresholds can hold");
    if (tokens == 0)
        return {1.0};
    if (tokens == capacity(thresholds)) {
        // everyone sits at their own threshold and nothing ever trades
        const auto top = static_cast<std::size_t>(config.protocol.strategy.max_threshold());
        std::vector<double> full(top + 1, 0.0);
        for (int K : thresholds)
            full[static_cast<std::size_t>(K)] += 1.0;
        for (auto& x : full)
            x /= static_cast<double>(thresholds.size());
        return full;
    }
    return invariant_distribution(config.protocol, config.rho).eta;
}

// Moves single tokens until the total matches, never touching `frozen`.
void fix_total(Population& pop, long long target, Engine& rng, int frozen)
{
    const auto n = static_cast<std::uint64_t>(pop.holdings.size());
    long long total = std::accumulate(pop.holdings.begin(), pop.holdings.end(), 0LL);
    while (total != target) {
        const auto i = static_cast<std::size_t>(bounded(rng, n));
        if (static_cast<int>(i) == frozen)
            continue;
        if (total < target && pop.holdings[i] < pop.thresholds[i]) {
            ++pop.holdings[i];
            ++total;
        } else if (total > target && pop.holdings[i] > 0) {
            --pop.holdings[i];
            --total;
        }
    }
}

Population make_population(const SimConfig& config, Engine& rng, const std::vector<double>& target,
                           int frozen = -1)
{
    const int n = config.n_agents;
    if (n < 2)
        throw Error(ErrorKind::InvalidParams, "simulation needs at least 2 agents");
    if (!(config.rho > 0.0 && config.rho <= 0.5))
        throw Error(ErrorKind::InvalidParams, "rho must lie in (0, 1/2]");
    if (config.steps < 0 || config.burn_in < 0)
        throw Error(ErrorKind::InvalidParams, "steps and burn-in must be non-negative");

    Population pop;
    pop.thresholds = assign_thresholds(config.protocol.strategy, n);
    const long long tokens = config.total_tokens();
    if (tokens < 0 || tokens > capacity(pop.thresholds))
        throw Error(ErrorKind::InfeasibleAllocation, "token supply exceeds what the thresholds can hold");

    pop.holdings.assign(static_cast<std::size_t>(n), 0);
    if (config.init == InitMode::NearUniformSpread) {
        const long long base = tokens / n;
        const long long extra = tokens % n;
        for (int i = 0; i < n; ++i)
            pop.holdings[static_cast<std::size_t>(i)] = static_cast<int>(base + (i < extra ? 1 : 0));
    } else {
        std::vector<double> cdf(target.size());
        std::partial_sum(target.begin(), target.end(), cdf.begin());
        for (int i = 0; i < n; ++i) {
            const double u = unit(rng) * cdf.back();
            const auto k = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
            const int cap = i == frozen ? k : pop.thresholds[static_cast<std::size_t>(i)];
            pop.holdings[static_cast<std::size_t>(i)] = std::min(k, cap);
        }
        fix_total(pop, tokens, rng, frozen);
    }

    pop.order.resize(static_cast<std::size_t>(n));
    std::iota(pop.order.begin(), pop.order.end(), 0u);
    pop.pairs = static_cast<int>(std::floor(config.rho * n));
    return pop;
}

// One matching period. Returns the number of trades; `tagged_event` receives
// +1/-1 if agent `tagged` served/bought this period.
long step(Population& pop, Engine& rng, std::vector<long long>* counts = nullptr, int tagged = -1,
          int* tagged_event = nullptr)
{
    const std::size_t n = pop.order.size();
    const std::size_t drawn = 2 * static_cast<std::size_t>(pop.pairs);
    for (std::size_t i = 0; i < drawn; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(bounded(rng, n - i));
        std::swap(pop.order[i], pop.order[j]);
    }

    long trades = 0;
    for (std::size_t p = 0; p < drawn; p += 2) {
        const auto client = pop.order[p];
        const auto server = pop.order[p + 1];
        int& paying = pop.holdings[client];
        int& serving = pop.holdings[server];
        if (paying < 1 || serving >= pop.thresholds[server])
            continue;
        if (counts) {
            --(*counts)[static_cast<std::size_t>(paying)];
            ++(*counts)[static_cast<std::size_t>(paying - 1)];
            --(*counts)[static_cast<std::size_t>(serving)];
            ++(*counts)[static_cast<std::size_t>(serving + 1)];
        }
        --paying;
        ++serving;
        ++trades;
        if (tagged_event) {
            if (static_cast<int>(client) == tagged)
                *tagged_event = -1;
            else if (static_cast<int>(server) == tagged)
                *tagged_event = +1;
        }
    }
    return trades;
}

} // namespace

SimReport run_simulation(const SimConfig& config, const StepObserver& observer)
{
    Engine rng(config.seed);
    const auto target = analytic_target(config);
    auto pop = make_population(config, rng, target);

    const int top = std::max(*std::max_element(pop.holdings.begin(), pop.holdings.end()),
                             *std::max_element(pop.thresholds.begin(), pop.thresholds.end()));
    std::vector<long long> counts(static_cast<std::size_t>(top) + 1, 0);
    for (int h : pop.holdings)
        ++counts[static_cast<std::size_t>(h)];
    std::vector<long double> accumulated(counts.size(), 0.0L);

    SimReport report;
    report.seed = config.seed;
    report.n_agents = config.n_agents;
    report.steps = config.steps;
    report.burn_in = config.burn_in;
    report.total_tokens = config.total_tokens();

    const int top_threshold = config.protocol.strategy.max_threshold();
    const double n = config.n_agents;
    long long measured_trades = 0;
    long measured_steps = 0;
    for (long t = 0; t < config.steps; ++t) {
        const long trades = step(pop, rng, &counts);
        report.trades += trades;

        long long tokens = 0;
        for (std::size_t k = 0; k < counts.size(); ++k)
            tokens += static_cast<long long>(k) * counts[k];
        if (tokens != report.total_tokens)
            report.token_conservation_check = false;

        if (t >= config.burn_in) {
            ++measured_steps;
            measured_trades += trades;
            for (std::size_t k = 0; k < counts.size(); ++k)
                accumulated[k] += counts[k];
        }
        if (observer) {
            const auto K = static_cast<std::size_t>(top_threshold);
            observer(StepRecord{t, trades, counts[0] / n, K < counts.size() ? counts[K] / n : 0.0});
        }
    }

    report.empirical_eta.assign(counts.size(), 0.0);
    if (measured_steps > 0) {
        for (std::size_t k = 0; k < counts.size(); ++k)
            report.empirical_eta[k] = static_cast<double>(accumulated[k] / (measured_steps * n));
        if (pop.pairs > 0)
            report.empirical_efficiency =
                static_cast<double>(measured_trades) / (static_cast<double>(pop.pairs) * measured_steps);
    }

    report.invariant_eta = target;
    const std::size_t len = std::max(target.size(), report.empirical_eta.size());
    for (std::size_t k = 0; k < len; ++k) {
        const double a = k < target.size() ? target[k] : 0.0;
        const double b = k < report.empirical_eta.size() ? report.empirical_eta[k] : 0.0;
        report.l1_distance_to_invariant += std::abs(a - b);
    }
    return report;
}

DeviationEstimate deviation_payoff_estimate(const SimConfig& config, const PopulationParams& payoff,
                                            int deviant_threshold, int horizon, int replications,
                                            unsigned threads)
{
    payoff.validate();
    if (deviant_threshold < 0 || horizon < 0 || replications < 1)
        throw Error(ErrorKind::InvalidParams, "deviation estimate needs K' >= 0, horizon >= 0, replications >= 1");

    SimConfig cfg = config;
    cfg.init = InitMode::SampleFromInvariant;
    const auto target = analytic_target(cfg);

    std::vector<double> samples(static_cast<std::size_t>(replications), 0.0);
    parallel_for(samples.size(), threads, [&](std::size_t rep) {
        Engine rng(splitmix64(config.seed ^ splitmix64(rep)));
        auto pop = make_population(cfg, rng, target, 0);
        pop.thresholds[0] = deviant_threshold;

        double value = 0.0;
        double discount = 1.0;
        for (int t = 0; t < horizon; ++t) {
            int event = 0;
            step(pop, rng, nullptr, 0, &event);
            if (event < 0)
                value += discount * payoff.b;
            else if (event > 0)
                value -= discount * payoff.c;
            discount *= payoff.beta;
        }
        samples[rep] = value;
    });

    DeviationEstimate out;
    out.threshold = deviant_threshold;
    out.replications = replications;
    out.horizon = horizon;
    const double n = replications;
    out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    if (replications > 1) {
        double ss = 0.0;
        for (double x : samples)
            ss += (x - out.mean) * (x - out.mean);
        out.standard_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return out;
}

} // namespace token_lab
