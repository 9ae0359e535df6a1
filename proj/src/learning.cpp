#include "nonbayes/learning.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "nonbayes/error.hpp"
#include "nonbayes/scenario.hpp"

namespace nonbayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const double* x, int count, int stride) {
  double hi = kNegInf;
  for (int p = 0; p < count; ++p) hi = std::max(hi, x[p * stride]);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (int p = 0; p < count; ++p) acc += std::exp(x[p * stride] - hi);
  return hi + std::log(acc);
}

}  // namespace

Vector row_logsumexp(const Matrix& x) {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double hi = x.row(i).maxCoeff();
    out(i) = hi == kNegInf ? kNegInf : hi + std::log((x.row(i).array() - hi).exp().sum());
  }
  return out;
}

BeliefState BeliefState::from_priors(const Matrix& priors) {
  if ((priors.array() < 0.0).any()) throw ValidationError("priors must be non-negative");
  BeliefState s;
  s.log_beliefs = priors.array().log().matrix();
  const Vector lse = row_logsumexp(s.log_beliefs);
  for (Eigen::Index i = 0; i < priors.rows(); ++i) {
    if (lse(i) == kNegInf)
      throw ValidationError("agent " + std::to_string(i + 1) + " has an all-zero prior");
    s.log_beliefs.row(i).array() -= lse(i);
  }
  return s;
}

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t trial) {
  return mix64(mix64(master_seed) ^ (trial * 0xD1B54A32D192ED03ull));
}

double unit_uniform(std::uint64_t trial_seed, long step, int agent) {
  std::uint64_t h = mix64(trial_seed ^ (static_cast<std::uint64_t>(step) * 0x9E3779B97F4A7C15ull));
  h = mix64(h ^ (static_cast<std::uint64_t>(agent) + 1) * 0xC2B2AE3D27D4EB4Full);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

SignalDraw sample_signals(const LikelihoodModel& model, std::uint64_t trial_seed, long step) {
  SignalDraw draw;
  draw.step = step;
  draw.outcomes.resize(static_cast<std::size_t>(model.agent_count()));
  for (int i = 0; i < model.agent_count(); ++i) {
    const Vector& f = model.agent(i).truth;
    const double u = unit_uniform(trial_seed, step, i);
    int pick = -1;
    double cdf = 0.0;
    for (Eigen::Index s = 0; s < f.size(); ++s) {
      if (f(s) <= 0.0) continue;
      cdf += f(s);
      pick = static_cast<int>(s);
      if (u < cdf) break;
    }
    draw.outcomes[static_cast<std::size_t>(i)] = pick;
  }
  return draw;
}

BeliefState update_beliefs(const BeliefState& state, const WeightMatrix& weights,
                           const SignalDraw& draw, const LikelihoodModel& model) {
  const int n = model.agent_count();
  const int m = model.hypothesis_count();
  BeliefState next;
  next.step = state.step + 1;
  next.log_beliefs.resize(n, m);
  const Matrix& prev = state.log_beliefs;
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Matrix& ll = model.log_likelihood(i);
    const int s = draw.outcomes[static_cast<std::size_t>(i)];
    for (int p = 0; p < m; ++p) {
      terms.clear();
      for (int j = 0; j < n; ++j) {
        const double w = weights(i, j);
        // 0 * -inf must contribute nothing.
        if (w != 0.0) terms.push_back(w * prev(j, p));
      }
      // Summing in sorted order makes the result independent of agent labels.
      std::sort(terms.begin(), terms.end());
      double acc = 0.0;
      for (double t : terms) acc += t;
      next.log_beliefs(i, p) = acc + ll(s, p);
    }
    const double lse = logsumexp(next.log_beliefs.data() + i, m, static_cast<int>(n));
    for (int p = 0; p < m; ++p) {
      double& v = next.log_beliefs(i, p);
      v -= lse;
      if (std::isnan(v)) {
        std::ostringstream os;
        os << "belief update produced NaN at step " << next.step << " for agent " << i + 1
           << ", hypothesis '" << model.hypotheses().label(p) << "'";
        throw Error(os.str());
      }
    }
  }
  return next;
}

LogRatioState log_ratio(const BeliefState& state, int theta_star) {
  const Matrix& lb = state.log_beliefs;
  if (theta_star < 0 || theta_star >= lb.cols())
    throw ValidationError("log_ratio: reference hypothesis out of range");
  LogRatioState out;
  out.reference = theta_star;
  out.phi.resize(lb.rows(), lb.cols());
  for (Eigen::Index i = 0; i < lb.rows(); ++i) {
    const double ref = lb(i, theta_star);
    if (!std::isfinite(ref))
      throw ValidationError("log_ratio: agent " + std::to_string(i + 1) +
                            " has zero belief on the reference hypothesis (positive-prior "
                            "assumption)");
    out.phi.row(i).array() = lb.row(i).array() - ref;
    out.phi(i, theta_star) = 0.0;
  }
  return out;
}

Vector log_likelihood_ratio(const LikelihoodModel& model, const SignalDraw& draw, int theta,
                            int theta_star) {
  Vector out(model.agent_count());
  for (int i = 0; i < model.agent_count(); ++i) {
    const int s = draw.outcomes[static_cast<std::size_t>(i)];
    out(i) = model.log_likelihood(i)(s, theta) - model.log_likelihood(i)(s, theta_star);
  }
  return out;
}

Vector TrajectoryRecord::phi(std::size_t r, int theta) const {
  if (reference < 0) throw ValidationError("trajectory has no optimal reference hypothesis");
  const Matrix& lb = log_beliefs.at(r);
  return lb.col(theta) - lb.col(reference);
}

int default_record_every(long steps) { return steps <= 1000 ? 1 : 10; }

TrajectoryRecord run_trial(const Scenario& scenario, std::size_t trial, std::uint64_t trial_seed,
                           long steps, int record_every) {
  if (steps < 0) throw ValidationError("run_trial: negative step count");
  if (record_every < 1) throw ValidationError("run_trial: record_every must be positive");
  TrajectoryRecord rec;
  rec.trial = trial;
  rec.seed = trial_seed;
  const OptimalSets sets = optimal_hypothesis_sets(scenario.model);
  if (!sets.common.empty()) rec.reference = sets.common.front();

  const std::size_t expected = static_cast<std::size_t>(steps / record_every) + 2;
  rec.steps.reserve(expected);
  rec.log_beliefs.reserve(expected);

  BeliefState state = BeliefState::from_priors(scenario.priors);
  rec.steps.push_back(0);
  rec.log_beliefs.push_back(state.log_beliefs);
  for (long k = 0; k < steps; ++k) {
    const SignalDraw draw = sample_signals(scenario.model, trial_seed, k + 1);
    try {
      state = update_beliefs(state, scenario.schedule.weights(k), draw, scenario.model);
    } catch (const Error& e) {
      throw Error("trial " + std::to_string(trial) + ", step " + std::to_string(k + 1) + ": " +
                  e.what());
    }
    if (state.step % record_every == 0 || state.step == steps) {
      rec.steps.push_back(state.step);
      rec.log_beliefs.push_back(state.log_beliefs);
    }
  }
  return rec;
}

void write_trajectory_csv_header(std::ostream& os) {
  os << "trial,k,agent,hypothesis,belief,log_belief\n";
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record,
                          const HypothesisSpace& hypotheses) {
  const auto old_precision = os.precision(17);
  for (std::size_t r = 0; r < record.steps.size(); ++r) {
    const Matrix& lb = record.log_beliefs[r];
    for (Eigen::Index i = 0; i < lb.rows(); ++i)
      for (Eigen::Index p = 0; p < lb.cols(); ++p)
        os << record.trial << ',' << record.steps[r] << ',' << i + 1 << ','
           << hypotheses.label(static_cast<int>(p)) << ',' << std::exp(lb(i, p)) << ','
           << lb(i, p) << '\n';
  }
  os.precision(old_precision);
}

}  // namespace nonbayes
