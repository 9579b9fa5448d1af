// One PASS/FAIL line per acceptance criterion; exit status is the number of failures.

#include "token_lab/cli.hpp"
#include "token_lab/equilibrium.hpp"
#include "token_lab/errors.hpp"
#include "token_lab/protocol_design.hpp"
#include "token_lab/simulator.hpp"
#include "token_lab/value_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace token_lab;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& name, const std::string& detail)
{
    if (!ok)
        ++failures;
    std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

std::vector<std::vector<std::string>> run_csv(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    if (cli::run(args, out, err) != 0)
        throw std::runtime_error("token_lab " + args.front() + " failed: " + err.str());
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

double num(const std::string& s)
{
    return s == "nan" ? std::nan("") : std::stod(s);
}

PopulationParams random_params(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return PopulationParams::normalized(0.02 + 0.48 * u(rng), 0.05 + 0.94 * u(rng), 1.05 + 9.0 * u(rng));
}

void uniform_steady_state()
{
    Stopwatch sw;
    double worst = 0.0;
    for (int K = 1; K <= 50; ++K) {
        const auto s = invariant_distribution(Protocol::special(K), 0.5);
        for (double x : s.eta)
            worst = std::max(worst, std::abs(x - 1.0 / (K + 1)));
    }
    const double t = sw.seconds();
    report(1, worst < 1e-12 && t < 1.0, "uniform steady state", fmt("max dev %.3g, %.3f s", worst, t));
}

void exact_efficiency()
{
    double worst = 0.0;
    for (int K = 1; K <= 50; ++K) {
        const double k = K;
        const double eff = efficiency(invariant_distribution(Protocol::special(K), 0.5));
        worst = std::max(worst, std::abs(eff - (k / (k + 1)) * (k / (k + 1))));
    }
    report(2, worst < 1e-12, "exact efficiency of Pi_K", fmt("max dev %.3g", worst));
}

void balance_invariant()
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const int K = 1 + static_cast<int>(rng() % 50);
        const double alpha = K * (0.001 + 0.998 * u(rng));
        const auto s = invariant_distribution(Protocol{alpha, PopulationStrategy::pure(K)}, 0.5);
        worst = std::max(worst, std::abs(s.mu * std::pow(1 - s.mu, K) - s.nu * std::pow(1 - s.nu, K)));
    }
    report(3, worst < 1e-10, "balance invariant", fmt("max |lhs - rhs| %.3g over 200 instances", worst));
}

void oracle_equivalence()
{
    Stopwatch sw;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int K = 1 + static_cast<int>(rng() % 30);
        const double alpha = K * (0.02 + 0.96 * u(rng));
        const auto p = random_params(rng);
        const auto s = invariant_distribution(Protocol{alpha, PopulationStrategy::pure(K)}, p.rho);
        // error after n sweeps is at most beta^n b / (1 - beta)
        const double bound = 1e-11 * (1 - p.beta) / p.b;
        const int sweeps = static_cast<int>(std::ceil(std::log(bound) / std::log(p.beta)));
        const auto direct = solve_values(K, p, s).V;
        const auto iter = value_iteration_oracle(K, p, s, sweeps).V;
        for (std::size_t k = 0; k < direct.size(); ++k)
            worst = std::max(worst, std::abs(direct[k] - iter[k]));
    }
    const double t = sw.seconds();
    report(4, worst < 1e-8 && t < 10.0, "value solver vs value iteration", fmt("sup-norm %.3g, %.3f s", worst, t));
}

void closed_form_anchors()
{
    const auto bi = beta_interval(Protocol::special(1), 0.5, 2.0);
    const auto ri = r_interval(Protocol::special(1), 0.5, 0.85);
    const double e1 = std::abs(bi.lo - 0.8);
    const double e2 = std::abs(bi.hi - (1.25 - std::sqrt(0.8125)) / 0.375);
    const double e3 = std::abs(ri.lo - (1 - 0.75 * 0.85) / (0.25 * 0.85));
    const double worst = std::max({e1, e2, e3});
    report(5, worst < 1e-9, "closed-form interval anchors",
           fmt("beta_L err %.3g, beta_H err %.3g, r_L err %.3g", e1, e2, e3));
}

void marginal_properties()
{
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int bad_i = 0, bad_ii = 0, bad_iii = 0, bad_2 = 0, premise = 0;
    auto draw = [&](int& K, PopulationParams& p, SteadyState& s) {
        K = 1 + static_cast<int>(rng() % 50);
        p = random_params(rng);
        s = invariant_distribution(Protocol{K * (0.02 + 0.96 * u(rng)), PopulationStrategy::pure(K)}, p.rho);
    };
    for (int i = 0; i < 500; ++i) {
        int K;
        PopulationParams p;
        SteadyState s;
        draw(K, p, s);
        const auto M = solve_marginals(K, p, s).M;
        if (!std::all_of(M.begin(), M.end(), [](double m) { return m > 0.0; }))
            ++bad_i;
        for (int k = 1; k + 1 < K; ++k) {
            const auto j = static_cast<std::size_t>(k);
            if (M[j] > M[j - 1] && M[j] > M[j + 1]) {
                ++bad_ii;
                break;
            }
        }
        auto higher = p;
        higher.beta = p.beta + (0.999 - p.beta) * (0.01 + 0.99 * u(rng));
        const auto M2 = solve_marginals(K, higher, s).M;
        for (int k = 0; k < K; ++k)
            if (!(M[static_cast<std::size_t>(k)] < M2[static_cast<std::size_t>(k)])) {
                ++bad_2;
                break;
            }
    }
    for (int attempt = 0; attempt < 200000 && premise < 500; ++attempt) {
        int K;
        PopulationParams p;
        SteadyState s;
        draw(K, p, s);
        const auto M = solve_marginals(K, p, s).M;
        if (M[static_cast<std::size_t>(K) - 1] < p.c / p.beta)
            continue;
        ++premise;
        for (int k = 1; k < K; ++k)
            if (!(M[static_cast<std::size_t>(k) - 1] > M[static_cast<std::size_t>(k)])) {
                ++bad_iii;
                break;
            }
    }
    const bool ok = bad_i == 0 && bad_ii == 0 && bad_iii == 0 && bad_2 == 0 && premise == 500;
    std::ostringstream d;
    d << "violations (i) " << bad_i << ", (ii) " << bad_ii << ", (iii) " << bad_iii << " of " << premise
      << ", monotone in beta " << bad_2 << "; 500 instances each";
    report(6, ok, "marginal sign, shape and monotonicity", d.str());
}

void interleaving()
{
    int broken = 0, chains = 0;
    for (double rho : {0.1, 0.3, 0.5}) {
        for (double r : {1.5, 2.0, 5.0}) {
            ++chains;
            if (!beta_interleaving(10, rho, r).strictly_interleaved)
                ++broken;
        }
        for (double beta : {0.8, 0.9, 0.95}) {
            ++chains;
            if (!r_interleaving(10, rho, beta).strictly_interleaved)
                ++broken;
        }
    }
    report(7, broken == 0, "interleaving of equilibrium intervals",
           std::to_string(chains - broken) + "/" + std::to_string(chains) + " chains strict for K = 1..10");
}

struct GridPoint {
    double r, beta;
};

std::vector<GridPoint> bracket_grid()
{
    std::vector<GridPoint> g;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
            g.push_back({1.2 + 8.8 * i / 19.0, 0.5 + 0.49 * j / 19.0});
    return g;
}

void threshold_bracket()
{
    Stopwatch sw;
    int outside = 0, weak = 0, with_robust = 0;
    for (const auto& pt : bracket_grid()) {
        const auto p = PopulationParams::normalized(0.5, pt.beta, pt.r);
        const auto b = threshold_bounds(p);
        int best_robust = 0;
        for (int K = 1; K <= static_cast<int>(std::ceil(b.K_H)) + 5; ++K) {
            const auto cls = check_equilibrium(Protocol::special(K), p);
            if (!cls.is_equilibrium())
                continue;
            if (K < b.K_L || K > b.K_H)
                ++outside;
            if (cls.tag == EquilibriumTag::RobustEquilibrium && K >= b.K_L)
                best_robust = std::max(best_robust, K);
        }
        if (best_robust > 0) {
            ++with_robust;
            const double kl = std::ceil(b.K_L);
            const double floor_eff = (kl / (kl + 1)) * (kl / (kl + 1));
            const double k = best_robust;
            if ((k / (k + 1)) * (k / (k + 1)) < floor_eff)
                ++weak;
        }
    }
    const double t = sw.seconds();
    std::ostringstream d;
    d << outside << " equilibrium thresholds outside [K_L, K_H], " << weak << "/" << with_robust
      << " points below the efficiency floor, " << fmt("%.2f s", t);
    report(8, outside == 0 && weak == 0 && t < 60.0, "threshold bracket", d.str());
}

void design_procedure()
{
    int mismatched = 0, over_cap = 0, both_empty = 0, found = 0;
    for (const auto& pt : bracket_grid()) {
        const auto p = PopulationParams::normalized(0.5, pt.beta, pt.r);
        const auto b = threshold_bounds(p);
        const auto scan = exhaustive_equilibrium_scan(p, b.first(), b.last());
        try {
            const auto d = bisection_design(p);
            ++found;
            if (std::find(scan.begin(), scan.end(), d.K_star) == scan.end())
                ++mismatched;
            if (d.iterations > b.iteration_cap())
                ++over_cap;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NoEquilibriumFound || !scan.empty())
                ++mismatched;
            else
                ++both_empty;
        }
    }
    std::ostringstream d;
    d << found << " designs found, " << both_empty << " both empty, " << mismatched << " mismatches, " << over_cap
      << " over the iteration cap";
    report(9, mismatched == 0 && over_cap == 0, "bisection design vs exhaustive scan", d.str());
}

void sweep_shapes()
{
    std::ostringstream d;
    bool ok = true;
    try {
        // pure-equilibrium bands in beta at alpha = 1/4
        const auto sweep = run_csv({"sweep", "--alpha", "0.25", "--rho", "0.5", "--r", "2", "--beta-min", "0.7",
                                    "--beta-max", "0.96", "--beta-steps", "2001", "--k-max", "4"});
        std::map<int, std::pair<double, double>> band;
        for (const auto& row : sweep) {
            if (row[2] != "RobustEquilibrium")
                continue;
            const int K = std::stoi(row[1]);
            const double beta = num(row[0]);
            auto it = band.find(K);
            if (it == band.end())
                band[K] = {beta, beta};
            else
                it->second.second = beta;
        }
        bool bands_ok = band.size() == 4;
        for (int K = 2; K <= 4 && bands_ok; ++K) {
            const auto& prev = band[K - 1];
            const auto& cur = band[K];
            bands_ok = prev.first < cur.first && prev.second < cur.second && cur.first <= prev.second;
        }
        d << "bands " << band.size() << (bands_ok ? " overlapping, shifting right" : " MALFORMED");
        ok = ok && bands_ok;

        const auto fig3 = run_csv({"fig3", "--rho", "0.5", "--r", "2", "--beta-min", "0.8", "--beta-max", "0.97",
                                   "--beta-steps", "35"});
        int below = 0, strict = 0;
        for (const auto& row : fig3) {
            const double opt = num(row[3]), piK = num(row[4]);
            if (std::isnan(piK))
                continue;
            if (std::isnan(opt) || opt < piK)
                ++below;
            else if (opt > piK + 1e-9)
                ++strict;
        }
        d << "; fig3 " << below << " rows with eff_opt < eff_piK, " << strict << " strict";
        ok = ok && below == 0 && strict > 0;

        const auto fig4 = run_csv({"fig4", "--rho", "0.5", "--r", "2", "--beta-min", "0.8", "--beta-max", "0.97",
                                   "--beta-steps", "35", "--fixed-k", "3"});
        const auto pi3 = beta_interval(Protocol::special(3), 0.5, 2.0);
        double cap = 0.0, gap_off_band = 0.0;
        for (const auto& row : fig4) {
            const double beta = num(row[0]), opt = num(row[1]), fixed = num(row[2]);
            cap = std::max(cap, fixed);
            if (beta < pi3.lo || beta > pi3.hi)
                gap_off_band = std::max(gap_off_band, opt - fixed);
        }
        d << fmt("; fig4 max eff_fixedK %.4f, largest gap off the Pi_3 band %.3f", cap, gap_off_band);
        ok = ok && cap <= 0.5625 + 1e-12 && gap_off_band >= 0.25;
    } catch (const std::exception& e) {
        ok = false;
        d << " error: " << e.what();
    }
    report(10, ok, "sweep shapes", d.str());
}

void simulation_convergence()
{
    Stopwatch sw;
    SimConfig c;
    c.n_agents = 10000;
    c.steps = 5000;
    c.burn_in = 1000;
    c.seed = 7;
    c.rho = 0.5;
    c.protocol = Protocol::special(4);
    const auto r = run_simulation(c);
    const double t = sw.seconds();
    const bool ok = r.l1_distance_to_invariant < 0.05 && std::abs(r.empirical_efficiency - 0.64) <= 0.02 &&
                    r.token_conservation_check && t < 30.0;
    report(11, ok, "simulation convergence",
           fmt("L1 %.4f, efficiency %.4f, %.2f s", r.l1_distance_to_invariant, r.empirical_efficiency, t));
}

void deviation_check()
{
    SimConfig c;
    c.n_agents = 200;
    c.seed = 12;
    c.rho = 0.5;
    c.protocol = Protocol::special(1);
    const auto payoff = PopulationParams::normalized(0.5, 0.85, 2.0);
    const unsigned threads = cli::thread_budget();
    const int horizon = 120, reps = 4000;
    const auto comply = deviation_payoff_estimate(c, payoff, 1, horizon, reps, threads);
    bool ok = true;
    std::ostringstream d;
    d << fmt("K'=1: %.4f +- %.4f", comply.mean, comply.standard_error);
    for (int deviant : {0, 2}) {
        const auto dev = deviation_payoff_estimate(c, payoff, deviant, horizon, reps, threads);
        const double se = std::hypot(comply.standard_error, dev.standard_error);
        ok = ok && comply.mean >= dev.mean - 2 * se;
        d << "; K'=" << deviant << fmt(": %.4f +- %.4f", dev.mean, dev.standard_error);
    }
    report(12, ok, "no profitable one-step threshold deviation", d.str());
}

} // namespace

int main()
{
    const std::vector<void (*)()> criteria{uniform_steady_state, exact_efficiency,  balance_invariant,
                                           oracle_equivalence,   closed_form_anchors, marginal_properties,
                                           interleaving,         threshold_bracket, design_procedure,
                                           sweep_shapes,        simulation_convergence, deviation_check};
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        try {
            criteria[i]();
        } catch (const std::exception& e) {
            report(static_cast<int>(i) + 1, false, "criterion", std::string("threw: ") + e.what());
        }
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures;
}
