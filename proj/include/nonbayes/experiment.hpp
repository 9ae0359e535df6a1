#pragma once

// Monte Carlo orchestration and empirical checks of the convergence results:
// consistency, decay-rate floor, the high-probability bound, and the
// contraction of backward products.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nonbayes/error.hpp"
#include "nonbayes/learning.hpp"
#include "nonbayes/scenario.hpp"
#include "nonbayes/theory.hpp"

namespace nonbayes {

struct MonteCarloOptions {
  int record_every = 0;  // 0: default_record_every(steps)
  int threads = 0;       // 0: hardware concurrency, capped by NONBAYES_THREADS
  // Keep per-trial log-beliefs of every suboptimal hypothesis at each recorded
  // step; needed by check_theorem2.
  bool retain_suboptimal = true;
};

// Worker count after applying the NONBAYES_THREADS cap.
int resolve_thread_count(int requested);

class MonteCarloSummary {
 public:
  long trials = 0;
  long steps = 0;
  int record_every = 1;
  int n = 0;
  int m = 0;
  std::vector<long> record_steps;
  std::vector<std::string> labels;
  std::vector<int> optimal;     // Theta*
  std::vector<int> suboptimal;  // Theta \ Theta*
  std::string scenario_hash;

  // Flat (record, agent, hypothesis) statistics over trials, probability space
  // except log_mean = log(mean belief), which stays finite after the mean
  // underflows.
  std::vector<double> mean, stddev, min, max, log_mean;

  // (trial, record, agent, suboptimal index) log-beliefs; empty unless
  // retained.
  std::vector<double> retained;

  std::size_t records() const { return record_steps.size(); }
  std::size_t index(std::size_t r, int agent, int hypothesis) const {
    return (r * static_cast<std::size_t>(n) + static_cast<std::size_t>(agent)) *
               static_cast<std::size_t>(m) +
           static_cast<std::size_t>(hypothesis);
  }
  double retained_log_belief(long trial, std::size_t r, int agent, std::size_t q) const;
  bool has_retained() const { return !retained.empty(); }
};

// Runs `trials` independent trials with seeds derived from master_seed and
// aggregates them. Output is bit-identical for any thread count.
MonteCarloSummary monte_carlo(const Scenario& scenario, long trials, long steps,
                              std::uint64_t master_seed, const MonteCarloOptions& options = {});

class InsufficientHorizon : public Error {
 public:
  InsufficientHorizon(const std::string& what, long required)
      : Error(what), required_(required) {}
  long required_steps() const noexcept { return required_; }

 private:
  long required_;
};

inline constexpr long kDefaultHorizonMargin = 200;
inline constexpr double kBinomialZ99 = 2.5758293035489004;  // two-sided 99%

// Half-width of the two-sided 99% normal-approximation binomial interval.
double binomial_margin(double rho, long trials);

struct ComplianceEntry {
  int agent = 0;
  int hypothesis = 0;
  long violating_trials = 0;
  double fraction = 0.0;
  bool pass = true;
};

struct ComplianceReport {
  double rho = 0.0;
  long onset = 0;  // N(rho)
  long required_steps = 0;
  long horizon = 0;
  long trials = 0;
  double margin = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  bool vacuous = false;  // bound >= 1 at every recorded k >= N(rho)
  std::vector<ComplianceEntry> entries;
  bool pass = true;
  RateCertificate certificate;
  std::string scenario_hash;

  double max_fraction() const;
};

// A trial violates for (agent, theta) when the belief exceeds
// exp(-k gamma2 / 2 + gamma1) at any recorded k >= N(rho). Passes iff every
// violation fraction is at most rho + binomial_margin(rho, trials).
// Throws InsufficientHorizon when steps < N(rho) + margin_steps.
ComplianceReport check_theorem2(const MonteCarloSummary& summary, const RateCertificate& cert,
                                double rho, long margin_steps = kDefaultHorizonMargin);

// Fraction of trials with belief >= bound at each (record, agent, suboptimal
// index), flattened in that order.
std::vector<double> pointwise_violation_fractions(const MonteCarloSummary& summary,
                                                  const RateCertificate& cert);

struct SlopeEstimate {
  int hypothesis = 0;
  long window_start = 0;
  long window_end = 0;
  std::size_t points = 0;
  Vector slope;      // per agent
  double ceiling = 0.0;  // -(delta / n) ||H(theta)||_1
  double tolerance = 0.0;
  std::vector<bool> pass;

  bool passed() const;
};

// Ordinary least squares of the trial-averaged phi_k^i(theta) on k over the
// tail window [fraction * K, K].
SlopeEstimate estimate_decay_slope(std::span<const TrajectoryRecord> trajectories, int theta,
                                   const RateCertificate& cert, double window_start_fraction = 0.5,
                                   double tolerance_fraction = 0.1);

double least_squares_slope(std::span<const double> x, std::span<const double> y);

struct ContractionEntry {
  long t = 0;
  long limit_horizon = 0;
  double max_excess = 0.0;  // max over k of deviation - bound
  long worst_k = 0;
  double worst_deviation = 0.0;
  double worst_bound = 0.0;
};

struct ContractionReport {
  RateConstants constants;
  std::vector<ContractionEntry> entries;
  bool pass = true;
};

inline constexpr double kContractionSlack = 1e-9;

// Compares max_{ij} |[A_{k:t}]_{ij} - phi_t^j| with C lambda^(k - t) for every
// t in t_list and t <= k <= k_max.
ContractionReport verify_lemma1(const GraphSchedule& schedule, std::span<const long> t_list,
                                long k_max, const RateConstants& constants,
                                double limit_tolerance = 1e-13);

struct OrdinalChecks {
  bool informed_agent_fastest = true;  // agent 1 below agents 4..6 for k >= from_step
  bool decreasing = true;              // log-mean strictly decreasing on the grid
  long first_failure_step = -1;
};

// Ordinal reading of the mean-belief curves on `theta`: agent 1's mean below
// those of agents 4, 5, 6 at every recorded k >= from_step, and every agent's
// log-mean strictly decreasing across the grid from_step, from_step + stride, ...
OrdinalChecks check_ordinal(const MonteCarloSummary& summary, int theta, long from_step = 50,
                            long stride = 50);

struct ReproductionOptions {
  long trials = 500;
  long steps = 0;  // 0: max(2000, N(min rho) + margin)
  std::uint64_t master_seed = 20150101;
  int threads = 0;
  std::vector<double> rho_list = {0.05, 0.1, 0.2};
};

// A confidence level whose check was skipped because K < N(rho) + margin.
struct SkippedCheck {
  double rho = 0.0;
  long required_steps = 0;
  long horizon = 0;
};

struct ReproductionResult {
  std::vector<std::filesystem::path> files;
  MonteCarloSummary summary;
  RateCertificate certificate;
  std::vector<ComplianceReport> compliance;
  std::vector<SkippedCheck> skipped;
  OrdinalChecks ordinal;
};

// Runs the builtin fig-1 scenario and writes summary.csv, violations.csv,
// certificate.json, compliance.json and figure2.csv under output_dir.
ReproductionResult reproduce_paper(const std::filesystem::path& output_dir,
                                   const ReproductionOptions& options = {});

}  // namespace nonbayes
