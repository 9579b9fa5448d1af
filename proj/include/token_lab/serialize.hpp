#pragma once

#include "token_lab/equilibrium.hpp"
#include "token_lab/protocol_design.hpp"
#include "token_lab/simulator.hpp"
#include "token_lab/value_solver.hpp"

#include <json.hpp>

#include <ostream>
#include <string>

namespace token_lab {

// 12 significant digits, '.' separator regardless of locale; "nan" for NaN.
std::string format_number(double x);

// CSV `k,eta`.
void write_steady_csv(std::ostream& out, const SteadyState& steady);
// alpha, thresholds/weights, mu, nu, tilt.
nlohmann::json steady_summary(const SteadyState& steady);

// CSV `k,M,V` over holdings 0..K+1; M(K+1) continues geometrically.
void write_profile_csv(std::ostream& out, const MarginalProfile& profile);

nlohmann::json to_json(const EquilibriumClass& cls);
nlohmann::json to_json(const ParameterInterval& interval);
nlohmann::json to_json(const ThresholdBounds& bounds);
nlohmann::json to_json(const DesignResult& design);
nlohmann::json to_json(const ProtocolCandidate& candidate);
nlohmann::json to_json(const SearchResult& result);
nlohmann::json to_json(const SimReport& report);
nlohmann::json to_json(const DeviationEstimate& estimate);

// CSV `K,lo,hi`.
void write_interval_csv(std::ostream& out, const InterleavingTable& table);
// CSV `beta,K,class,mix_weight`; mix_weight empty when there is no mixed root.
void write_sweep_csv(std::ostream& out, const std::vector<ClassificationRow>& rows);
// CSV `beta,K_star,alpha_star,eff_opt,eff_piK`; nan where no robust protocol exists.
void write_fig3_csv(std::ostream& out, const std::vector<OptimalRow>& rows);
// CSV `beta,eff_opt,eff_fixedK`.
void write_fig4_csv(std::ostream& out, const std::vector<FixedThresholdRow>& rows);

// Streaming CSV `t,trades,eta0,etaK`.
void write_step_header(std::ostream& out);
void write_step_row(std::ostream& out, const StepRecord& record);

} // namespace token_lab
