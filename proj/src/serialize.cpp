#include "token_lab/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace token_lab {

using nlohmann::json;

std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    // snprintf follows LC_NUMERIC; undo a comma decimal separator if a caller changed it.
    for (char* p = buf; *p; ++p)
        if (*p == ',')
            *p = '.';
    return buf;
}

void write_steady_csv(std::ostream& out, const SteadyState& steady)
{
    out << "k,eta\n";
    for (std::size_t k = 0; k < steady.eta.size(); ++k)
        out << k << ',' << format_number(steady.eta[k]) << '\n';
}

json steady_summary(const SteadyState& steady)
{
    json weights = json::array();
    json thresholds = json::array();
    for (const auto& [K, w] : steady.strategy.weights()) {
        thresholds.push_back(K);
        weights.push_back(w);
    }
    return {{"alpha", steady.alpha}, {"thresholds", thresholds}, {"weights", weights},
            {"mu", steady.mu},       {"nu", steady.nu},          {"tilt", steady.tilt}};
}

void write_profile_csv(std::ostream& out, const MarginalProfile& profile)
{
    out << "k,M,V\n";
    for (int k = 0; k <= profile.K + 1; ++k) {
        const auto i = static_cast<std::size_t>(k);
        out << k << ',' << format_number(profile.marginal(k)) << ','
            << (i < profile.V.size() ? format_number(profile.V[i]) : "") << '\n';
    }
}

json to_json(const EquilibriumClass& cls)
{
    return {{"class", std::string(to_string(cls.tag))},
            {"slack_low", cls.slack_low},
            {"slack_high", cls.slack_high},
            {"is_equilibrium", cls.is_equilibrium()}};
}

json to_json(const ParameterInterval& interval)
{
    return {{"kind", interval.kind == IntervalKind::Beta ? "beta" : "r"},
            {"lo", interval.lo},
            {"hi", interval.hi}};
}

json to_json(const ThresholdBounds& bounds)
{
    return {{"K_L", bounds.K_L},
            {"K_H", bounds.K_H},
            {"first", bounds.first()},
            {"last", bounds.last()},
            {"iteration_cap", bounds.iteration_cap()}};
}

json to_json(const DesignResult& design)
{
    json trail = json::array();
    for (const auto& step : design.trail)
        trail.push_back({{"K", step.K}, {"classification", to_json(step.classification)}});
    return {{"K_star", design.K_star},
            {"alpha_star", design.alpha_star},
            {"efficiency", design.efficiency},
            {"iterations", design.iterations},
            {"bounds", to_json(design.bounds)},
            {"classification", to_json(design.classification)},
            {"trail", trail}};
}

json to_json(const ProtocolCandidate& candidate)
{
    return {{"alpha", candidate.alpha},
            {"K", candidate.K},
            {"efficiency", candidate.efficiency},
            {"classification", to_json(candidate.classification)}};
}

json to_json(const SearchResult& result)
{
    auto opt = [](const std::optional<ProtocolCandidate>& c) { return c ? to_json(*c) : json(nullptr); };
    return {{"best", opt(result.best)}, {"best_special", opt(result.best_special)}};
}

json to_json(const SimReport& report)
{
    return {{"empirical_eta", report.empirical_eta},
            {"invariant_eta", report.invariant_eta},
            {"l1_distance_to_invariant", report.l1_distance_to_invariant},
            {"empirical_efficiency", report.empirical_efficiency},
            {"trades", report.trades},
            {"total_tokens", report.total_tokens},
            {"token_conservation_check", report.token_conservation_check},
            {"generator", report.generator},
            {"seed", report.seed},
            {"n_agents", report.n_agents},
            {"steps", report.steps},
            {"burn_in", report.burn_in}};
}

json to_json(const DeviationEstimate& estimate)
{
    return {{"threshold", estimate.threshold},
            {"mean", estimate.mean},
            {"standard_error", estimate.standard_error},
            {"replications", estimate.replications},
            {"horizon", estimate.horizon}};
}

void write_interval_csv(std::ostream& out, const InterleavingTable& table)
{
    out << "K,lo,hi\n";
    for (const auto& row : table.rows)
        out << row.K << ',' << format_number(row.interval.lo) << ',' << format_number(row.interval.hi) << '\n';
}

void write_sweep_csv(std::ostream& out, const std::vector<ClassificationRow>& rows)
{
    out << "beta,K,class,mix_weight\n";
    for (const auto& row : rows) {
        out << format_number(row.beta) << ',' << row.K << ',' << to_string(row.tag) << ','
            << (row.mix_weight ? format_number(*row.mix_weight) : "") << '\n';
    }
}

void write_fig3_csv(std::ostream& out, const std::vector<OptimalRow>& rows)
{
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    out << "beta,K_star,alpha_star,eff_opt,eff_piK\n";
    for (const auto& row : rows) {
        out << format_number(row.beta) << ',';
        if (row.best)
            out << row.best->K << ',' << format_number(row.best->alpha) << ','
                << format_number(row.best->efficiency);
        else
            out << "nan,nan,nan";
        out << ',' << format_number(row.best_special ? row.best_special->efficiency : nan) << '\n';
    }
}

void write_fig4_csv(std::ostream& out, const std::vector<FixedThresholdRow>& rows)
{
    out << "beta,eff_opt,eff_fixedK\n";
    for (const auto& row : rows)
        out << format_number(row.beta) << ',' << format_number(row.eff_opt) << ','
            << format_number(row.eff_fixed) << '\n';
}

void write_step_header(std::ostream& out)
{
    out << "t,trades,eta0,etaK\n";
}

void write_step_row(std::ostream& out, const StepRecord& record)
{
    out << record.t << ',' << record.trades << ',' << format_number(record.eta0) << ','
        << format_number(record.etaK) << '\n';
}

} // namespace token_lab
