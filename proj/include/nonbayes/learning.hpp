#pragma once

// Belief dynamics in log space: each agent takes a weighted geometric mean of
// its neighbours' beliefs and multiplies in the likelihood of its private
// signal.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "nonbayes/graph.hpp"
#include "nonbayes/theory.hpp"

namespace nonbayes {

struct Scenario;

inline constexpr double kNormalizationTolerance = 1e-9;

struct BeliefState {
  Matrix log_beliefs;  // n x m, row i holds log mu^i(theta)
  long step = 0;

  // Rows of `priors` are normalized; zero entries become -infinity.
  static BeliefState from_priors(const Matrix& priors);
  Matrix beliefs() const { return log_beliefs.array().exp().matrix(); }
};

// Log-sum-exp of each row; -infinity for an all -infinity row.
Vector row_logsumexp(const Matrix& x);

struct SignalDraw {
  std::vector<int> outcomes;  // index into each agent's alphabet
  long step = 0;
};

// Counter-based randomness: every draw is a pure function of
// (trial seed, step, agent), so trials reproduce regardless of recording
// cadence or thread scheduling.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t trial);
double unit_uniform(std::uint64_t trial_seed, long step, int agent);

// One outcome per agent by inverse CDF over the ordered alphabet.
SignalDraw sample_signals(const LikelihoodModel& model, std::uint64_t trial_seed, long step);

// mu_{k+1}^i(theta) proportional to prod_j mu_k^j(theta)^{A_ij} l_i(s^i | theta).
// Throws Error naming (agent, hypothesis) if a NaN appears.
BeliefState update_beliefs(const BeliefState& state, const WeightMatrix& weights,
                           const SignalDraw& draw, const LikelihoodModel& model);

struct LogRatioState {
  Matrix phi;  // n x m, phi(i, theta) = log mu^i(theta) - log mu^i(theta*)
  int reference = 0;
};

LogRatioState log_ratio(const BeliefState& state, int theta_star);

// [L]_i = log l_i(s^i | theta) - log l_i(s^i | theta*).
Vector log_likelihood_ratio(const LikelihoodModel& model, const SignalDraw& draw, int theta,
                            int theta_star);

struct TrajectoryRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<long> steps;
  std::vector<Matrix> log_beliefs;  // one n x m matrix per recorded step
  int reference = -1;               // theta* used for phi, -1 if none

  long horizon() const { return steps.empty() ? 0 : steps.back(); }
  // phi_k^i(theta) at recorded index r.
  Vector phi(std::size_t r, int theta) const;
};

// 1 up to K = 1000 steps, else 10.
int default_record_every(long steps);

// Runs K updates from the scenario priors. Records step 0, every
// `record_every`-th step, and step K.
TrajectoryRecord run_trial(const Scenario& scenario, std::size_t trial, std::uint64_t trial_seed,
                           long steps, int record_every);

// Columns: trial,k,agent,hypothesis,belief,log_belief. Agents are 1-based.
void write_trajectory_csv_header(std::ostream& os);
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record,
                          const HypothesisSpace& hypotheses);

}  // namespace nonbayes
