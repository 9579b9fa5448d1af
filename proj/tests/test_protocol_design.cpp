#include "token_lab/errors.hpp"
#include "token_lab/protocol_design.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace token_lab;

namespace {

double special_efficiency(int K)
{
    const double k = K;
    return (k / (k + 1)) * (k / (k + 1));
}

} // namespace

TEST_CASE("efficiency of steady states")
{
    CHECK(efficiency(invariant_distribution(Protocol::special(3), 0.5)) == doctest::Approx(0.5625).epsilon(1e-14));

    const double y = (-0.4 + std::sqrt(0.16 + 4 * 1.4 * 0.6)) / 2.8;
    const double z = 1 + y + y * y;
    const auto s = invariant_distribution(Protocol{0.6, PopulationStrategy::pure(2)}, 0.5);
    CHECK(efficiency(s) == doctest::Approx((1 - 1 / z) * (1 - y * y / z)).epsilon(1e-12));
    CHECK(efficiency(s) == doctest::Approx(0.37735).epsilon(1e-4));

    CHECK(efficiency(summarize({1.0, 0.0, 0.0}, PopulationStrategy::pure(2))) == 0.0);
}

TEST_CASE("efficiency upper bounds")
{
    const auto b = efficiency_bounds(0.6, 2);
    CHECK(b.upper_alpha == doctest::Approx(2.0 / 3.0));
    CHECK(b.upper_K == doctest::Approx(4.0 / 9.0));
    CHECK(b.tightest() == doctest::Approx(4.0 / 9.0));
    CHECK(efficiency_bounds(0.3, 1).upper_K == 0.25);

    for (int K = 1; K <= 20; ++K)
        CHECK(efficiency(invariant_distribution(Protocol::special(K), 0.5)) ==
              doctest::Approx(efficiency_bounds(K / 2.0, K).upper_K).epsilon(1e-12));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const int K = 1 + static_cast<int>(rng() % 30);
        const double alpha = K * (0.01 + 0.98 * u(rng));
        const double eff = efficiency(invariant_distribution(Protocol{alpha, PopulationStrategy::pure(K)}, 0.5));
        CHECK(eff <= efficiency_bounds(alpha, K).tightest() + 1e-12);
    }
}

TEST_CASE("threshold bounds")
{
    const auto b = threshold_bounds(PopulationParams::normalized(0.5, 0.9, 2.0));
    CHECK(b.K_L == doctest::Approx(0.2291).epsilon(1e-3));
    CHECK(b.K_H == doctest::Approx(6.9082).epsilon(1e-3));
    CHECK(b.first() == 1);
    CHECK(b.last() == 6);
    CHECK(b.iteration_cap() == 4);

    // r -> 1: K_L -> max(log_base(1/2) - 1, 0)
    const auto near_one = threshold_bounds(PopulationParams::normalized(0.5, 0.99, 1.0 + 1e-9));
    const double base = 0.5 * 0.99 / (2 * 0.01 + 2 * 0.5 * 0.99);
    CHECK(near_one.K_L == doctest::Approx(std::max(std::log(0.5) / std::log(base) - 1, 0.0)).epsilon(1e-6));

    const auto high = threshold_bounds(PopulationParams::normalized(0.5, 0.99, 2.0));
    CHECK(high.K_H == doctest::Approx(std::log(0.25) / std::log(0.495 / 0.505)).epsilon(1e-12));
    CHECK(high.K_H > b.K_H);
}

TEST_CASE("bisection design")
{
    const auto at85 = bisection_design(PopulationParams::normalized(0.5, 0.85, 2.0));
    CHECK(at85.K_star == 1);
    CHECK(at85.alpha_star == 0.5);
    CHECK(at85.efficiency == doctest::Approx(0.25));
    CHECK(at85.classification.is_equilibrium());

    const auto p95 = PopulationParams::normalized(0.5, 0.95, 2.0);
    const auto at95 = bisection_design(p95);
    CHECK(at95.K_star > 1);
    const auto scan = exhaustive_equilibrium_scan(p95, at95.bounds.first(), at95.bounds.last());
    CHECK(std::find(scan.begin(), scan.end(), at95.K_star) != scan.end());
    CHECK(at95.iterations <= at95.bounds.iteration_cap());

    // K_H < 1: nothing to search
    const auto empty = PopulationParams::normalized(0.5, 0.3, 2.0);
    REQUIRE(threshold_bounds(empty).empty());
    CHECK_THROWS_AS(bisection_design(empty), Error);
}

TEST_CASE("bisection design agrees with exhaustive scan")
{
    for (int i = 0; i < 12; ++i) {
        for (int j = 0; j < 12; ++j) {
            const double r = 1.2 + 8.8 * i / 11.0;
            const double beta = 0.5 + 0.49 * j / 11.0;
            const auto p = PopulationParams::normalized(0.5, beta, r);
            const auto bounds = threshold_bounds(p);
            const auto scan = exhaustive_equilibrium_scan(p, bounds.first(), bounds.last());
            try {
                const auto d = bisection_design(p);
                CHECK(std::find(scan.begin(), scan.end(), d.K_star) != scan.end());
                CHECK(d.iterations <= bounds.iteration_cap());
            } catch (const Error& e) {
                CHECK(e.kind() == ErrorKind::NoEquilibriumFound);
                CHECK(scan.empty());
            }
        }
    }
}

TEST_CASE("every equilibrium threshold lies inside the bounds")
{
    for (double r : {1.2, 2.0, 5.0, 10.0}) {
        for (double beta : {0.5, 0.7, 0.85, 0.9, 0.95, 0.99}) {
            const auto p = PopulationParams::normalized(0.5, beta, r);
            const auto b = threshold_bounds(p);
            for (int K : exhaustive_equilibrium_scan(p, 1, static_cast<int>(std::ceil(b.K_H)) + 5)) {
                CHECK(K >= b.K_L);
                CHECK(K <= b.K_H);
            }
        }
    }
}

TEST_CASE("efficiency of the best special protocol grows with patience")
{
    for (double r : {1.5, 2.0, 4.0}) {
        double prev_eff = 0.0;
        int prev_K = 0;
        for (double beta : {0.9, 0.95, 0.99, 0.995}) {
            const auto p = PopulationParams::normalized(0.5, beta, r);
            const auto b = threshold_bounds(p);
            int best = 0;
            for (int K = 1; K <= static_cast<int>(std::ceil(b.K_H)) + 5; ++K)
                if (check_equilibrium(Protocol::special(K), p).tag == EquilibriumTag::RobustEquilibrium)
                    best = K;
            REQUIRE(best > 0);
            CHECK(special_efficiency(best) >= prev_eff);
            CHECK(best >= prev_K);
            prev_eff = special_efficiency(best);
            prev_K = best;
        }
    }
}

TEST_CASE("optimal protocol search")
{
    const auto p = PopulationParams::normalized(0.5, 0.9, 2.0);
    const auto found = optimal_protocol_search(p);
    REQUIRE(found.best);
    REQUIRE(found.best_special);
    CHECK(found.best->efficiency >= found.best_special->efficiency);
    CHECK(found.best->efficiency > found.best_special->efficiency);
    CHECK(found.best->classification.tag == EquilibriumTag::RobustEquilibrium);
    CHECK(found.best_special->alpha == found.best_special->K / 2.0);
    CHECK(found.best->efficiency ==
          doctest::Approx(efficiency(invariant_distribution(
                              Protocol{found.best->alpha, PopulationStrategy::pure(found.best->K)}, 0.5))));

    // deterministic grid, deterministic answer
    SearchOptions threaded;
    threaded.threads = 3;
    const auto again = optimal_protocol_search(p, threaded);
    CHECK(again.best->K == found.best->K);
    CHECK(again.best->alpha == found.best->alpha);

    CHECK_THROWS_AS(optimal_protocol_search(PopulationParams::normalized(0.5, 0.3, 2.0)), Error);
}

TEST_CASE("search ties go to the smaller threshold")
{
    const auto p = PopulationParams::normalized(0.5, 0.86, 2.0);
    SearchOptions options;
    options.alpha_steps = 20;
    const auto found = search_protocols(p, options);
    REQUIRE(found.best);
    // the winner is unique in efficiency or the earliest (K, alpha) in grid order
    SteadyGrid grid(found.best->K, options.alpha_steps, 0.5);
    for (int K = 1; K <= found.best->K; ++K) {
        for (int j = 1; j < options.alpha_steps; ++j) {
            const auto& s = grid.at(K, j);
            if (check_equilibrium(K, s, p).tag != EquilibriumTag::RobustEquilibrium)
                continue;
            const bool earlier = K < found.best->K || grid.alpha(K, j) < found.best->alpha;
            if (earlier)
                CHECK(efficiency(s) < found.best->efficiency);
        }
    }
}

TEST_CASE("sweeps")
{
    const auto betas = linear_grid(0.8, 0.95, 7);
    REQUIRE(betas.size() == 7);
    CHECK(betas.front() == 0.8);
    CHECK(betas.back() == doctest::Approx(0.95));

    const auto cls = classification_sweep(0.25, 0.5, 2.0, betas, 3, 2);
    CHECK(cls.size() == betas.size() * 3);
    for (std::size_t i = 1; i < cls.size(); ++i)
        CHECK((cls[i - 1].beta < cls[i].beta || (cls[i - 1].beta == cls[i].beta && cls[i - 1].K < cls[i].K)));

    const auto fig3 = optimal_sweep(0.5, 2.0, betas, 40, 2);
    for (const auto& row : fig3)
        if (row.best && row.best_special)
            CHECK(row.best->efficiency >= row.best_special->efficiency);

    const auto fig4 = fixed_threshold_sweep(0.5, 2.0, betas, 3, 40, 2);
    for (const auto& row : fig4) {
        CHECK(row.eff_fixed <= 0.5625 + 1e-12);
        CHECK(row.eff_opt >= row.eff_fixed);
    }
}
