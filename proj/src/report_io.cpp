#include "nonbayes/report_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace nonbayes {

using nlohmann::json;

namespace {

// JSON has no infinities; encode them as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json node_index(int v) { return v < 0 ? json(nullptr) : json(v + 1); }

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

std::string format_rho(double rho) {
  std::ostringstream os;
  os << std::setprecision(17) << rho;
  return os.str();
}

}  // namespace

json to_json(const ValidationReport& report) {
  json out = json::array();
  for (const Violation& v : report.violations)
    out.push_back({{"check", v.check},
                   {"k", v.k},
                   {"i", node_index(v.i)},
                   {"j", node_index(v.j)},
                   {"detail", v.detail}});
  return out;
}

json to_json(const RateCertificate& c) {
  json n_of_rho = json::array();
  for (const auto& [rho, steps] : c.n_of_rho) n_of_rho.push_back({{"rho", rho}, {"N", steps}});
  json h = json::object();
  for (const auto& [p, vec] : c.h_vectors) h[c.hypothesis_labels.at(static_cast<std::size_t>(p))] = vector_json(vec);
  json optimal = json::array();
  for (int p : c.optimal) optimal.push_back(c.hypothesis_labels.at(static_cast<std::size_t>(p)));
  return {
      {"matrix_class", std::string(to_string(c.schedule.matrix_class))},
      {"n", c.schedule.n},
      {"B", c.schedule.b},
      {"eta", c.schedule.eta},
      {"lazy_metropolis_lambda_constant", c.schedule.lazy_metropolis_constant},
      {"C", c.c},
      {"lambda", c.lambda},
      {"one_minus_lambda", c.one_minus_lambda},
      {"delta", c.delta},
      {"delta_bound", c.delta_bound},
      {"delta_empirical", c.delta_empirical ? json(*c.delta_empirical) : json(nullptr)},
      {"delta_source", c.delta_source()},
      {"alpha", c.alpha},
      {"gamma1", number(c.gamma1)},
      {"gamma2", number(c.gamma2)},
      {"crossover_step", number(c.crossover_step())},
      {"N_of_rho", n_of_rho},
      {"optimal_hypotheses", optimal},
      {"H_vectors", h},
      {"general_fallback",
       {{"C", c.general_fallback.c},
        {"lambda", c.general_fallback.lambda},
        {"one_minus_lambda", c.general_fallback.one_minus_lambda},
        {"delta_bound", c.general_fallback.delta_bound}}},
  };
}

json to_json(const ComplianceReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"agent", e.agent + 1},
                       {"hypothesis", r.certificate.hypothesis_labels.at(static_cast<std::size_t>(e.hypothesis))},
                       {"violating_trials", e.violating_trials},
                       {"fraction", e.fraction},
                       {"pass", e.pass}});
  return {
      {"status", "checked"},
      {"rho", r.rho},
      {"N", r.onset},
      {"required_steps", r.required_steps},
      {"horizon", r.horizon},
      {"trials", r.trials},
      {"binomial_margin", r.margin},
      {"threshold", r.rho + r.margin},
      {"gamma1", number(r.gamma1)},
      {"gamma2", number(r.gamma2)},
      {"vacuous", r.vacuous},
      {"max_fraction", r.max_fraction()},
      {"pass", r.pass},
      {"entries", entries},
      {"scenario_hash", r.scenario_hash},
      {"certificate", to_json(r.certificate)},
  };
}

json to_json(const SkippedCheck& s) {
  return {{"status", "horizon insufficient"},
          {"rho", s.rho},
          {"required_steps", s.required_steps},
          {"horizon", s.horizon},
          {"pass", nullptr}};
}

json compliance_json(std::span<const ComplianceReport> reports,
                     std::span<const SkippedCheck> skipped, const MonteCarloSummary& summary) {
  json list = json::array();
  bool pass = true;
  for (const auto& r : reports) {
    list.push_back(to_json(r));
    pass = pass && r.pass;
  }
  for (const auto& s : skipped) list.push_back(to_json(s));
  return {{"pass", pass},
          {"complete", skipped.empty()},
          {"scenario_hash", summary.scenario_hash},
          {"trials", summary.trials},
          {"steps", summary.steps},
          {"reports", list}};
}

void write_summary_csv(std::ostream& os, const MonteCarloSummary& s) {
  const auto old = os.precision(17);
  os << "k,agent,hypothesis,mean,std,min,max,log_mean\n";
  for (std::size_t r = 0; r < s.records(); ++r)
    for (int i = 0; i < s.n; ++i)
      for (int p = 0; p < s.m; ++p) {
        const std::size_t x = s.index(r, i, p);
        os << s.record_steps[r] << ',' << i + 1 << ',' << s.labels[static_cast<std::size_t>(p)] << ','
           << s.mean[x] << ',' << s.stddev[x] << ',' << s.min[x] << ',' << s.max[x] << ','
           << s.log_mean[x] << '\n';
      }
  os.precision(old);
}

void write_violations_csv(std::ostream& os, std::span<const ComplianceReport> reports,
                          const MonteCarloSummary& s) {
  const auto old = os.precision(17);
  os << "agent,hypothesis,rho,fraction,n_trials,bound_params\n";
  for (const auto& r : reports)
    for (const auto& e : r.entries) {
      std::ostringstream params;
      params << std::setprecision(17) << "gamma1=" << r.gamma1 << ";gamma2=" << r.gamma2
             << ";N=" << r.onset << ";margin=" << r.margin;
      os << e.agent + 1 << ',' << s.labels[static_cast<std::size_t>(e.hypothesis)] << ','
         << format_rho(r.rho) << ',' << e.fraction << ',' << r.trials << ',' << params.str()
         << '\n';
    }
  os.precision(old);
}

void write_figure2_csv(std::ostream& os, const MonteCarloSummary& s, const RateCertificate& cert,
                       int theta, std::span<const int> agents) {
  const auto old = os.precision(17);
  os << "k,agent,mean_belief_theta2,bound\n";
  for (std::size_t r = 0; r < s.records(); ++r)
    for (int agent : agents) {
      const std::size_t x = s.index(r, agent - 1, theta);
      os << s.record_steps[r] << ',' << agent << ',' << s.mean[x] << ','
         << bound_curve(cert, static_cast<double>(s.record_steps[r])) << '\n';
    }
  os.precision(old);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(17) << j.dump(2) << '\n';
}

}  // namespace nonbayes
