#include "token_lab/cli.hpp"

#include "token_lab/equilibrium.hpp"
#include "token_lab/errors.hpp"
#include "token_lab/protocol_design.hpp"
#include "token_lab/serialize.hpp"
#include "token_lab/simulator.hpp"
#include "token_lab/value_solver.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <thread>

namespace token_lab::cli {

unsigned thread_budget()
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("TOKEN_LAB_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1)
            n = std::min(n, static_cast<unsigned>(cap));
    }
    return n;
}

namespace {

struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Runner = std::function<void(std::ostream&)>;

struct Flags {
    double alpha = 0.0;
    int k = 0;
    double mix_weight = 0.0;
    double rho = 0.5;
    double beta = 0.9;
    double r = 2.0;
    double tol = kClassificationTolerance;
    double root_tol = kRootTolerance;
    int chain = 0;
    double beta_min = 0.5;
    double beta_max = 0.99;
    int beta_steps = 50;
    int k_max = 0;
    int alpha_steps = 200;
    int fixed_k = 3;
    int agents = 10000;
    long steps = 5000;
    long burn_in = 1000;
    std::uint64_t seed = 1;
    std::string init = "spread";
    std::string stream_path;
    std::string meta_path;
    int deviant = 0;
    int horizon = 100;
    int replications = 2000;
};

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw Usage(message);
}

void check_rho(double rho) { require(rho > 0.0 && rho <= 0.5, "--rho must lie in (0, 0.5]"); }
void check_beta(double beta) { require(beta > 0.0 && beta < 1.0, "--beta must lie in (0, 1)"); }
void check_r(double r) { require(r > 1.0 && std::isfinite(r), "--r must exceed 1"); }
void check_k(int k) { require(k >= 1, "--k must be at least 1"); }

// --alpha defaults to K/2 when omitted.
double supply(const Flags& f, const CLI::Option* alpha_opt)
{
    if (alpha_opt->count() == 0)
        return f.k / 2.0;
    require(f.alpha > 0.0 && std::isfinite(f.alpha), "--alpha must be positive");
    return f.alpha;
}

void check_beta_grid(const Flags& f)
{
    require(f.beta_steps >= 1, "--beta-steps must be at least 1");
    require(f.beta_min > 0.0 && f.beta_max < 1.0 && f.beta_min <= f.beta_max,
            "need 0 < --beta-min <= --beta-max < 1");
}

void dump(std::ostream& out, const nlohmann::json& j)
{
    out << j.dump(2) << '\n';
}

struct Command {
    CLI::App* app;
    std::function<Runner()> prepare; // validates flags, returns the work
};

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Token economy analysis: steady states, equilibria, protocol design, simulation", "token_lab"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    std::string output_path;
    app.add_option("-o,--output", output_path, "Write results to this file instead of stdout");

    Flags f;
    std::vector<Command> commands;

    auto add_alpha = [&](CLI::App* sub) {
        return sub->add_option("--alpha", f.alpha, "Per-capita token supply (default K/2)");
    };
    auto add_k = [&](CLI::App* sub) { return sub->add_option("--k", f.k, "Threshold K"); };
    auto add_rho = [&](CLI::App* sub) { sub->add_option("--rho", f.rho, "Matching probability"); };
    auto add_beta = [&](CLI::App* sub) { sub->add_option("--beta", f.beta, "Discount factor"); };
    auto add_r = [&](CLI::App* sub) { sub->add_option("--r", f.r, "Benefit/cost ratio (c = 1)"); };
    auto add_tol = [&](CLI::App* sub) {
        sub->add_option("--tol", f.tol, "Classification tolerance on the slacks");
    };
    auto add_beta_grid = [&](CLI::App* sub) {
        sub->add_option("--beta-min", f.beta_min, "");
        sub->add_option("--beta-max", f.beta_max, "");
        sub->add_option("--beta-steps", f.beta_steps, "");
    };
    auto params = [&] {
        check_rho(f.rho);
        check_beta(f.beta);
        check_r(f.r);
        return PopulationParams::normalized(f.rho, f.beta, f.r);
    };

    {
        auto* sub = app.add_subcommand("steady", "Invariant token distribution (CSV k,eta)");
        auto* a = add_alpha(sub);
        add_k(sub)->required();
        sub->add_option("--mix-weight", f.mix_weight, "Weight on threshold K+1");
        add_rho(sub);
        sub->add_option("--meta", f.meta_path, "Also write a JSON summary (mu, nu, weights) here");
        commands.push_back({sub, [&, a] {
                                check_k(f.k);
                                check_rho(f.rho);
                                require(f.mix_weight >= 0.0 && f.mix_weight <= 1.0, "--mix-weight must lie in [0, 1]");
                                const Protocol protocol{supply(f, a), PopulationStrategy::mix(f.k, f.mix_weight)};
                                return Runner([&, protocol](std::ostream& o) {
                                    const auto steady = invariant_distribution(protocol, f.rho);
                                    write_steady_csv(o, steady);
                                    if (!f.meta_path.empty()) {
                                        std::ofstream meta(f.meta_path);
                                        if (!meta)
                                            throw Usage("cannot open " + f.meta_path);
                                        dump(meta, steady_summary(steady));
                                    }
                                });
                            }});
    }

    for (const char* name : {"marginals", "values"}) {
        auto* sub = app.add_subcommand(name, "Marginal utilities and values of Pi = (alpha, sigma_K) (CSV k,M,V)");
        auto* a = add_alpha(sub);
        add_k(sub)->required();
        add_rho(sub);
        add_beta(sub);
        add_r(sub);
        commands.push_back({sub, [&, a] {
                                check_k(f.k);
                                const auto p = params();
                                const Protocol protocol{supply(f, a), PopulationStrategy::pure(f.k)};
                                return Runner([&, p, protocol](std::ostream& o) {
                                    const auto steady = invariant_distribution(protocol, p.rho);
                                    write_profile_csv(o, solve_profile(f.k, p, steady));
                                });
                            }});
    }

    {
        auto* sub = app.add_subcommand("check", "Equilibrium classification (JSON)");
        auto* a = add_alpha(sub);
        add_k(sub)->required();
        add_rho(sub);
        add_beta(sub);
        add_r(sub);
        add_tol(sub);
        commands.push_back({sub, [&, a] {
                                check_k(f.k);
                                const auto p = params();
                                require(f.tol >= 0.0, "--tol must be non-negative");
                                const Protocol protocol{supply(f, a), PopulationStrategy::pure(f.k)};
                                return Runner([&, p, protocol](std::ostream& o) {
                                    dump(o, to_json(check_equilibrium(protocol, p, f.tol)));
                                });
                            }});
    }

    {
        auto* sub = app.add_subcommand("beta-interval", "Equilibrium interval in beta (JSON, or CSV K,lo,hi with --chain)");
        auto* a = add_alpha(sub);
        add_k(sub);
        add_rho(sub);
        add_r(sub);
        sub->add_option("--tol", f.root_tol, "Root tolerance on beta");
        sub->add_option("--chain", f.chain, "Tabulate Pi_1 .. Pi_N instead");
        commands.push_back({sub, [&, a] {
                                check_rho(f.rho);
                                check_r(f.r);
                                require(f.root_tol > 0.0, "--tol must be positive");
                                if (f.chain > 0)
                                    return Runner([&](std::ostream& o) {
                                        write_interval_csv(o, beta_interleaving(f.chain, f.rho, f.r, f.root_tol));
                                    });
                                check_k(f.k);
                                const Protocol protocol{supply(f, a), PopulationStrategy::pure(f.k)};
                                return Runner([&, protocol](std::ostream& o) {
                                    dump(o, to_json(beta_interval(protocol, f.rho, f.r, f.root_tol)));
                                });
                            }});
    }

    {
        auto* sub = app.add_subcommand("r-interval", "Equilibrium interval in r (JSON, or CSV K,lo,hi with --chain)");
        auto* a = add_alpha(sub);
        add_k(sub);
        add_rho(sub);
        add_beta(sub);
        sub->add_option("--chain", f.chain, "Tabulate Pi_1 .. Pi_N instead");
        commands.push_back({sub, [&, a] {
                                check_rho(f.rho);
                                check_beta(f.beta);
                                if (f.chain > 0)
                                    return Runner([&](std::ostream& o) {
                                        write_interval_csv(o, r_interleaving(f.chain, f.rho, f.beta));
                                    });
                                check_k(f.k);
                                const Protocol protocol{supply(f, a), PopulationStrategy::pure(f.k)};
                                return Runner([&, protocol](std::ostream& o) {
                                    dump(o, to_json(r_interval(protocol, f.rho, f.beta)));
                                });
                            }});
    }

    {
        auto* sub = app.add_subcommand("bounds", "Threshold bounds K_L, K_H (JSON)");
        add_rho(sub);
        add_beta(sub);
        add_r(sub);
        commands.push_back({sub, [&] {
                                const auto p = params();
                                return Runner([p](std::ostream& o) { dump(o, to_json(threshold_bounds(p))); });
                            }});
    }

    {
        auto* sub = app.add_subcommand("design", "Bisection over Pi_K for an equilibrium protocol (JSON)");
        add_rho(sub);
        add_beta(sub);
        add_r(sub);
        add_tol(sub);
        commands.push_back({sub, [&] {
                                const auto p = params();
                                return Runner([&, p](std::ostream& o) { dump(o, to_json(bisection_design(p, f.tol))); });
                            }});
    }

    {
        auto* sub = app.add_subcommand("optimize", "Most efficient robust (alpha, sigma_K) on a grid (JSON)");
        add_rho(sub);
        add_beta(sub);
        add_r(sub);
        sub->add_option("--alpha-steps", f.alpha_steps, "alpha grid j*K/steps per threshold");
        sub->add_option("--k-max", f.k_max, "Largest threshold searched (default ceil K_H)");
        commands.push_back({sub, [&] {
                                const auto p = params();
                                require(f.alpha_steps >= 2, "--alpha-steps must be at least 2");
                                require(f.k_max >= 0, "--k-max must be non-negative");
                                return Runner([&, p](std::ostream& o) {
                                    SearchOptions options;
                                    options.alpha_steps = f.alpha_steps;
                                    options.K_max = f.k_max;
                                    options.threads = thread_budget();
                                    dump(o, to_json(optimal_protocol_search(p, options)));
                                });
                            }});
    }

    {
        auto* sub = app.add_subcommand("sweep", "Classification of pure and mixed protocols over beta (CSV)");
        add_alpha(sub)->required();
        add_rho(sub);
        add_r(sub);
        add_beta_grid(sub);
        sub->add_option("--k-max", f.k_max, "Largest threshold (default: max ceil K_H over the grid)");
        commands.push_back({sub, [&] {
                                check_rho(f.rho);
                                check_r(f.r);
                                check_beta_grid(f);
                                require(f.alpha > 0.0 && std::isfinite(f.alpha), "--alpha must be positive");
                                return Runner([&](std::ostream& o) {
                                    const auto betas = linear_grid(f.beta_min, f.beta_max, f.beta_steps);
                                    int K_max = f.k_max;
                                    if (K_max <= 0) {
                                        K_max = static_cast<int>(std::floor(f.alpha)) + 1;
                                        for (double beta : betas) {
                                            const auto b = threshold_bounds(PopulationParams::normalized(f.rho, beta, f.r));
                                            K_max = std::max(K_max, static_cast<int>(std::ceil(b.K_H)));
                                        }
                                    }
                                    write_sweep_csv(o, classification_sweep(f.alpha, f.rho, f.r, betas, K_max,
                                                                            thread_budget()));
                                });
                            }});
    }

    {
        auto* sub = app.add_subcommand("fig3", "Optimal vs best Pi_K efficiency over beta (CSV)");
        add_rho(sub);
        add_r(sub);
        add_beta_grid(sub);
        sub->add_option("--alpha-steps", f.alpha_steps, "");
        commands.push_back({sub, [&] {
                                check_rho(f.rho);
                                check_r(f.r);
                                check_beta_grid(f);
                                require(f.alpha_steps >= 2, "--alpha-steps must be at least 2");
                                return Runner([&](std::ostream& o) {
                                    const auto betas = linear_grid(f.beta_min, f.beta_max, f.beta_steps);
                                    write_fig3_csv(o, optimal_sweep(f.rho, f.r, betas, f.alpha_steps, thread_budget()));
                                });
                            }});
    }

    {
        auto* sub = app.add_subcommand("fig4", "Optimal vs fixed-threshold efficiency over beta (CSV)");
        add_rho(sub);
        add_r(sub);
        add_beta_grid(sub);
        sub->add_option("--alpha-steps", f.alpha_steps, "");
        sub->add_option("--fixed-k", f.fixed_k, "");
        commands.push_back({sub, [&] {
                                check_rho(f.rho);
                                check_r(f.r);
                                check_beta_grid(f);
                                require(f.alpha_steps >= 2, "--alpha-steps must be at least 2");
                                require(f.fixed_k >= 1, "--fixed-k must be at least 1");
                                return Runner([&](std::ostream& o) {
                                    const auto betas = linear_grid(f.beta_min, f.beta_max, f.beta_steps);
                                    write_fig4_csv(o, fixed_threshold_sweep(f.rho, f.r, betas, f.fixed_k,
                                                                            f.alpha_steps, thread_budget()));
                                });
                            }});
    }

    {
        auto* sub = app.add_subcommand("simulate", "Agent-level simulation (SimReport JSON)");
        sub->add_option("--agents", f.agents, "");
        sub->add_option("--steps", f.steps, "");
        sub->add_option("--seed", f.seed, "");
        auto* a = add_alpha(sub);
        add_k(sub)->required();
        sub->add_option("--mix-weight", f.mix_weight, "Fraction of agents on threshold K+1");
        add_rho(sub);
        sub->add_option("--burn-in", f.burn_in, "");
        sub->add_option("--init", f.init, "Initial allocation")->check(CLI::IsMember({"spread", "invariant"}));
        sub->add_option("--stream", f.stream_path, "Per-step CSV t,trades,eta0,etaK");
        commands.push_back({sub, [&, a] {
                                check_k(f.k);
                                check_rho(f.rho);
                                require(f.agents >= 2, "--agents must be at least 2");
                                require(f.steps >= 0 && f.burn_in >= 0, "--steps and --burn-in must be non-negative");
                                require(f.mix_weight >= 0.0 && f.mix_weight <= 1.0, "--mix-weight must lie in [0, 1]");
                                SimConfig config;
                                config.n_agents = f.agents;
                                config.steps = f.steps;
                                config.seed = f.seed;
                                config.rho = f.rho;
                                config.burn_in = f.burn_in;
                                config.init = parse_init_mode(f.init);
                                // zero supply is a valid simulation (nothing ever trades)
                                config.protocol = Protocol{a->count() ? f.alpha : f.k / 2.0,
                                                           PopulationStrategy::mix(f.k, f.mix_weight)};
                                require(config.protocol.alpha >= 0.0, "--alpha must be non-negative");
                                return Runner([&, config](std::ostream& o) {
                                    std::ofstream stream;
                                    StepObserver observer;
                                    if (!f.stream_path.empty()) {
                                        stream.open(f.stream_path);
                                        if (!stream)
                                            throw Usage("cannot open " + f.stream_path);
                                        write_step_header(stream);
                                        observer = [&stream](const StepRecord& rec) { write_step_row(stream, rec); };
                                    }
                                    dump(o, to_json(run_simulation(config, observer)));
                                });
                            }});
    }

    {
        auto* sub = app.add_subcommand("deviate", "Monte Carlo payoff of one agent playing threshold K' (JSON)");
        sub->add_option("--agents", f.agents, "");
        sub->add_option("--seed", f.seed, "");
        auto* a = add_alpha(sub);
        add_k(sub)->required();
        add_rho(sub);
        add_beta(sub);
        add_r(sub);
        sub->add_option("--deviant", f.deviant, "Threshold K' of the tagged agent")->required();
        sub->add_option("--horizon", f.horizon, "");
        sub->add_option("--replications", f.replications, "");
        commands.push_back({sub, [&, a] {
                                check_k(f.k);
                                const auto p = params();
                                require(f.agents >= 2, "--agents must be at least 2");
                                require(f.deviant >= 0, "--deviant must be non-negative");
                                require(f.horizon >= 0, "--horizon must be non-negative");
                                require(f.replications >= 1, "--replications must be at least 1");
                                SimConfig config;
                                config.n_agents = f.agents;
                                config.seed = f.seed;
                                config.rho = f.rho;
                                config.protocol = Protocol{supply(f, a), PopulationStrategy::pure(f.k)};
                                return Runner([&, p, config](std::ostream& o) {
                                    dump(o, to_json(deviation_payoff_estimate(config, p, f.deviant, f.horizon,
                                                                              f.replications, thread_budget())));
                                });
                            }});
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return Ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return UsageError;
    }

    try {
        Runner work;
        for (const auto& cmd : commands)
            if (cmd.app->parsed())
                work = cmd.prepare();
        if (output_path.empty()) {
            work(out);
        } else {
            std::ofstream file(output_path);
            if (!file)
                throw Usage("cannot open " + output_path);
            work(file);
        }
    } catch (const Usage& e) {
        err << "usage error: " << e.what() << '\n';
        return UsageError;
    } catch (const Error& e) {
        err << nlohmann::json{{"error", to_string(e.kind())}, {"message", e.what()}}.dump() << '\n';
        return SolverError;
    }
    return Ok;
}

} // namespace token_lab::cli
