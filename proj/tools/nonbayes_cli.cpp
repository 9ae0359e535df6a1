// nonbayes: validate scenarios, compute certificates, run Monte Carlo
// experiments and reproduce the six-agent example.
//
// Exit codes: 0 success (possibly with warnings), 1 validation failure,
// 2 runtime failure. Errors go to stderr as a single line prefixed with
// "error[validation]:" or "error[runtime]:".

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nonbayes/config.hpp"
#include "nonbayes/experiment.hpp"
#include "nonbayes/learning.hpp"
#include "nonbayes/report_io.hpp"
#include "nonbayes/theory.hpp"

namespace fs = std::filesystem;
using namespace nonbayes;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Horizon for the empirical column-sum floor.
constexpr long kDeltaHorizon = 1000;

struct RunFlags {
  std::string scenario;
  std::string out;
  std::optional<long> trials;
  std::optional<long> steps;
  std::optional<std::uint64_t> seed;
  std::vector<double> rho;
  std::optional<int> record_every;
  std::string trajectories = "none";
  bool json = false;
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

// One line per violation, capped so a long horizon does not flood the terminal.
void print_graph_report(const ValidationReport& report) {
  std::cout << "graph: checked " << report.horizon << " steps, "
            << (report.ok() ? "ok" : std::to_string(report.violations.size()) + " violation(s)") << "\n";
  const std::size_t shown = std::min<std::size_t>(report.violations.size(), 20);
  for (std::size_t v = 0; v < shown; ++v) {
    const Violation& x = report.violations[v];
    std::cout << "  " << x.check << " k=" << x.k;
    if (x.i >= 0) std::cout << " i=" << x.i + 1;
    if (x.j >= 0) std::cout << " j=" << x.j + 1;
    std::cout << ": " << x.detail << "\n";
  }
  if (shown < report.violations.size())
    std::cout << "  ... " << report.violations.size() - shown << " more\n";
}

// Graph violations are hard errors for every subcommand.
void require_graph(const ScenarioConfig& cfg) {
  if (cfg.graph_ok()) return;
  const Violation& first = cfg.graph_report.violations.front();
  throw ValidationError("graph assumption fails (" + first.check + " at k=" + std::to_string(first.k) +
                        "): " + first.detail);
}

ScenarioConfig load(const RunFlags& f) {
  ScenarioConfig cfg = parse_scenario(f.scenario);
  for (const auto& w : cfg.warnings) warn(w);
  RunParams& run = cfg.scenario.run;
  if (f.trials) run.trials = *f.trials;
  if (f.steps) run.steps = *f.steps;
  if (f.seed) run.master_seed = *f.seed;
  if (f.record_every) run.record_every = *f.record_every;
  if (!f.rho.empty()) run.rho_list = f.rho;
  if (run.trials < 1) throw ValidationError("--trials must be at least 1");
  if (run.steps < 1) throw ValidationError("--steps must be at least 1");
  if (run.record_every < 0) throw ValidationError("--record-every must be positive");
  for (double r : run.rho_list)
    if (!(r > 0.0 && r < 1.0)) throw ValidationError("--rho values must lie in (0, 1)");
  return cfg;
}

fs::path prepare_out(const std::string& out) {
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
  return dir;
}

bool certifiable(const ScenarioConfig& cfg) {
  const int m = cfg.scenario.model.hypotheses().size();
  return cfg.optimal_set_nonempty() && !cfg.optimal_sets.suboptimal(m).empty();
}

RateCertificate certificate_for(const ScenarioConfig& cfg) {
  const Scenario& s = cfg.scenario;
  const DeltaEstimate delta = compute_delta(s.schedule, kDeltaHorizon);
  return build_certificate(s.model, s.schedule_params(), s.priors, s.run.rho_list, delta.empirical);
}

void print_certificate(const RateCertificate& c) {
  std::printf("%-22s %.10g\n", "C", c.c);
  std::printf("%-22s %.10g\n", "lambda", c.lambda);
  std::printf("%-22s %.10g (%s)\n", "delta", c.delta, c.delta_source());
  std::printf("%-22s %.10g\n", "delta lower bound", c.delta_bound);
  std::printf("%-22s %.10g\n", "alpha", c.alpha);
  std::printf("%-22s %.10g\n", "gamma1", c.gamma1);
  std::printf("%-22s %.10g\n", "gamma2", c.gamma2);
  std::printf("%-22s %.1f\n", "bound below 1 after k", c.crossover_step());
  for (const auto& [theta, h] : c.h_vectors) {
    if (std::find(c.optimal.begin(), c.optimal.end(), theta) != c.optimal.end()) continue;
    const std::string name = "||H(" + c.hypothesis_labels[static_cast<std::size_t>(theta)] + ")||_1";
    std::printf("%-22s %.10g\n", name.c_str(), h.lpNorm<1>());
  }
  for (const auto& [rho, n] : c.n_of_rho) {
    const std::string name = "N(rho=" + std::to_string(rho).substr(0, 6) + ")";
    std::printf("%-22s %ld\n", name.c_str(), n);
  }
}

int cmd_validate(const RunFlags& f) {
  const ScenarioConfig cfg = parse_scenario(f.scenario);
  for (const auto& w : cfg.warnings) warn(w);
  if (f.json) {
    nlohmann::json out = {{"scenario", cfg.scenario.name},
                          {"hash", scenario_hash(cfg.scenario)},
                          {"graph_ok", cfg.graph_ok()},
                          {"optimal_set_nonempty", cfg.optimal_set_nonempty()},
                          {"violations", to_json(cfg.graph_report)},
                          {"warnings", cfg.warnings}};
    std::cout << out.dump(2) << "\n";
  } else {
    const Scenario& s = cfg.scenario;
    std::cout << "scenario " << s.name << " (" << scenario_hash(s) << "): " << s.agent_count()
              << " agents, " << s.model.hypotheses().size() << " hypotheses, period "
              << s.schedule.period() << ", B=" << s.schedule.declared_b() << "\n";
    print_graph_report(cfg.graph_report);
    std::cout << "optimal set:";
    if (cfg.optimal_sets.common.empty()) std::cout << " empty";
    for (int t : cfg.optimal_sets.common)
      std::cout << " " << s.model.hypotheses().labels()[static_cast<std::size_t>(t)];
    std::cout << "\n";
  }
  require_graph(cfg);
  return kExitOk;
}

int cmd_bounds(const RunFlags& f) {
  const ScenarioConfig cfg = load(f);
  require_graph(cfg);
  if (!certifiable(cfg))
    throw ValidationError("no certificate: the optimal set is empty or contains every hypothesis");
  const RateCertificate cert = certificate_for(cfg);
  print_certificate(cert);
  if (!f.out.empty()) {
    const fs::path dir = prepare_out(f.out);
    write_json_file(dir / "certificate.json", to_json(cert));
    std::cout << "wrote " << (dir / "certificate.json").string() << "\n";
  }
  return kExitOk;
}

void write_trajectories(const ScenarioConfig& cfg, const fs::path& dir, const std::string& mode) {
  const Scenario& s = cfg.scenario;
  const int every = s.run.effective_record_every();
  std::ofstream combined;
  if (mode == "combined") {
    combined.open(dir / "trajectories.csv");
    if (!combined) throw Error("cannot write " + (dir / "trajectories.csv").string());
    write_trajectory_csv_header(combined);
  } else {
    fs::create_directories(dir / "trajectories");
  }
  for (long t = 0; t < s.run.trials; ++t) {
    const auto trial = static_cast<std::size_t>(t);
    const TrajectoryRecord rec =
        run_trial(s, trial, derive_trial_seed(s.run.master_seed, trial), s.run.steps, every);
    if (mode == "combined") {
      write_trajectory_csv(combined, rec, s.model.hypotheses());
      continue;
    }
    const fs::path path = dir / "trajectories" / ("trial_" + std::to_string(t) + ".csv");
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    write_trajectory_csv_header(out);
    write_trajectory_csv(out, rec, s.model.hypotheses());
  }
}

int cmd_simulate(const RunFlags& f) {
  const ScenarioConfig cfg = load(f);
  require_graph(cfg);
  const Scenario& s = cfg.scenario;
  const fs::path dir = prepare_out(f.out);

  MonteCarloOptions opt;
  opt.record_every = s.run.effective_record_every();
  const MonteCarloSummary summary = monte_carlo(s, s.run.trials, s.run.steps, s.run.master_seed, opt);
  {
    std::ofstream out(dir / "summary.csv");
    if (!out) throw Error("cannot write " + (dir / "summary.csv").string());
    write_summary_csv(out, summary);
  }

  std::vector<ComplianceReport> reports;
  std::vector<SkippedCheck> skipped;
  nlohmann::json compliance;
  if (certifiable(cfg)) {
    const RateCertificate cert = certificate_for(cfg);
    write_json_file(dir / "certificate.json", to_json(cert));
    for (double rho : s.run.rho_list) {
      try {
        reports.push_back(check_theorem2(summary, cert, rho));
      } catch (const InsufficientHorizon& e) {
        skipped.push_back({.rho = rho, .required_steps = e.required_steps(), .horizon = s.run.steps});
        warn("horizon insufficient for rho=" + std::to_string(rho) + ": needs " +
             std::to_string(e.required_steps()) + " steps, ran " + std::to_string(s.run.steps));
      }
    }
    compliance = compliance_json(reports, skipped, summary);
  } else {
    warn("optimal set is empty or contains every hypothesis; no certificate or compliance check");
    compliance = {{"pass", nullptr},
                  {"complete", false},
                  {"status", "no certificate"},
                  {"scenario_hash", summary.scenario_hash},
                  {"trials", summary.trials},
                  {"steps", summary.steps},
                  {"reports", nlohmann::json::array()}};
  }
  compliance["master_seed"] = s.run.master_seed;
  write_json_file(dir / "compliance.json", compliance);
  {
    std::ofstream out(dir / "violations.csv");
    if (!out) throw Error("cannot write " + (dir / "violations.csv").string());
    write_violations_csv(out, reports, summary);
  }
  if (f.trajectories != "none") write_trajectories(cfg, dir, f.trajectories);

  std::cout << "ran " << summary.trials << " trials x " << summary.steps << " steps\n";
  for (const ComplianceReport& r : reports)
    std::printf("rho=%g N=%ld max violation fraction %.4f (limit %.4f)%s: %s\n", r.rho, r.onset,
                r.max_fraction(), r.rho + r.margin, r.vacuous ? " vacuous" : "",
                r.pass ? "pass" : "FAIL");
  for (const SkippedCheck& sk : skipped)
    std::printf("rho=%g: horizon insufficient (needs %ld steps)\n", sk.rho, sk.required_steps);
  std::cout << "wrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_reproduce(const RunFlags& f) {
  ReproductionOptions opt;
  if (f.trials) opt.trials = *f.trials;
  if (f.steps) opt.steps = *f.steps;
  if (f.seed) opt.master_seed = *f.seed;
  if (!f.rho.empty()) opt.rho_list = f.rho;
  if (opt.trials < 1) throw ValidationError("--trials must be at least 1");
  for (double r : opt.rho_list)
    if (!(r > 0.0 && r < 1.0)) throw ValidationError("--rho values must lie in (0, 1)");
  const ReproductionResult res = reproduce_paper(f.out, opt);
  for (const ComplianceReport& r : res.compliance)
    std::printf("rho=%g N=%ld max violation fraction %.4f%s: %s\n", r.rho, r.onset, r.max_fraction(),
                r.vacuous ? " vacuous" : "", r.pass ? "pass" : "FAIL");
  for (const SkippedCheck& sk : res.skipped) {
    std::printf("rho=%g: horizon insufficient (needs %ld steps)\n", sk.rho, sk.required_steps);
    warn("compliance check skipped for rho=" + std::to_string(sk.rho));
  }
  std::printf("agent 1 fastest: %s, log-mean decreasing: %s\n",
              res.ordinal.informed_agent_fastest ? "yes" : "no", res.ordinal.decreasing ? "yes" : "no");
  for (const auto& p : res.files) std::cout << "wrote " << p.string() << "\n";
  return kExitOk;
}

void add_run_flags(CLI::App* sub, RunFlags& f) {
  sub->add_option("--trials", f.trials, "Monte Carlo trials");
  sub->add_option("--steps", f.steps, "Horizon K");
  sub->add_option("--seed", f.seed, "Master seed (overrides the scenario)");
  sub->add_option("--rho", f.rho, "Confidence level; repeatable")->take_all()->allow_extra_args(false);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed non-Bayesian learning over time-varying directed graphs"};
  app.require_subcommand(1);
  RunFlags f;

  auto* validate = app.add_subcommand("validate", "Check a scenario against the model assumptions");
  validate->add_option("scenario", f.scenario, "Scenario file or builtin name")->required();
  validate->add_flag("--json", f.json, "Print the report as JSON");

  auto* bounds = app.add_subcommand("bounds", "Compute the rate certificate without simulating");
  bounds->add_option("scenario", f.scenario, "Scenario file or builtin name")->required();
  bounds->add_option("--out", f.out, "Directory for certificate.json");
  bounds->add_option("--rho", f.rho, "Confidence level; repeatable")->take_all()->allow_extra_args(false);

  auto* simulate = app.add_subcommand("simulate", "Run Monte Carlo trials and check the bounds");
  simulate->add_option("scenario", f.scenario, "Scenario file or builtin name")->required();
  simulate->add_option("--out", f.out, "Output directory")->required();
  add_run_flags(simulate, f);
  simulate->add_option("--record-every", f.record_every, "Recording stride");
  simulate->add_option("--trajectories", f.trajectories,
                       "Per-trial trajectory CSVs: none, per-trial or combined")
      ->check(CLI::IsMember({"none", "per-trial", "combined"}));

  auto* reproduce = app.add_subcommand("reproduce-paper", "Run the builtin six-agent example");
  reproduce->add_option("--out", f.out, "Output directory")->required();
  add_run_flags(reproduce, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[validation]: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (*validate) return cmd_validate(f);
    if (*bounds) return cmd_bounds(f);
    if (*simulate) return cmd_simulate(f);
    return cmd_reproduce(f);
  } catch (const ValidationError& e) {
    std::cerr << "error[validation]: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error[runtime]: " << e.what() << "\n";
    return kExitRuntime;
  }
}
