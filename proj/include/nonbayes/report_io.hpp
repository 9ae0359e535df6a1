#pragma once

// JSON and CSV serialization of reports and Monte Carlo output. Floats are
// written with 17 significant digits.

#include <filesystem>
#include <iosfwd>
#include <span>

#include <json.hpp>

#include "nonbayes/experiment.hpp"
#include "nonbayes/graph.hpp"
#include "nonbayes/theory.hpp"

namespace nonbayes {

// Array of {check, k, i, j, detail}; node indices are 1-based, null when
// not applicable.
nlohmann::json to_json(const ValidationReport& report);
nlohmann::json to_json(const RateCertificate& cert);
nlohmann::json to_json(const ComplianceReport& report);
nlohmann::json to_json(const SkippedCheck& skipped);

// {pass, complete, scenario_hash, trials, steps, reports}. `pass` covers the
// checked levels only; `complete` is false when any level was skipped.
nlohmann::json compliance_json(std::span<const ComplianceReport> reports,
                               std::span<const SkippedCheck> skipped,
                               const MonteCarloSummary& summary);

// k,agent,hypothesis,mean,std,min,max,log_mean
void write_summary_csv(std::ostream& os, const MonteCarloSummary& summary);
// agent,hypothesis,rho,fraction,n_trials,bound_params
void write_violations_csv(std::ostream& os, std::span<const ComplianceReport> reports,
                          const MonteCarloSummary& summary);
// k,agent,mean_belief_theta2,bound for the given agents (1-based) on `theta`.
void write_figure2_csv(std::ostream& os, const MonteCarloSummary& summary,
                       const RateCertificate& cert, int theta, std::span<const int> agents);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace nonbayes
