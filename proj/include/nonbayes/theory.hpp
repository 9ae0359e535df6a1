#pragma once

// Statistical side of the learning problem: divergences, optimal hypothesis
// sets, divergence gaps, and the explicit rate certificate.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nonbayes/graph.hpp"

namespace nonbayes {

class HypothesisSpace {
 public:
  HypothesisSpace() = default;
  explicit HypothesisSpace(std::vector<std::string> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int p) const { return labels_.at(static_cast<std::size_t>(p)); }
  const std::vector<std::string>& labels() const { return labels_; }
  int index_of(const std::string& label) const;  // throws on unknown label

 private:
  std::vector<std::string> labels_;
};

// What one agent knows about its signal: the true distribution f over its
// alphabet and the likelihood l(s | theta) for every hypothesis.
struct AgentModel {
  std::vector<std::string> alphabet;
  Vector truth;       // f(s), length |alphabet|
  Matrix likelihood;  // l(s | theta): rows = signals, cols = hypotheses
};

inline constexpr double kProbabilityTolerance = 1e-12;

class LikelihoodModel {
 public:
  LikelihoodModel() = default;
  // Validates column sums, truth sums and strictly positive likelihoods.
  // Errors name the offending agent, hypothesis and signal.
  LikelihoodModel(HypothesisSpace hypotheses, std::vector<AgentModel> agents,
                  double tolerance = kProbabilityTolerance);

  int agent_count() const { return static_cast<int>(agents_.size()); }
  int hypothesis_count() const { return hypotheses_.size(); }
  const HypothesisSpace& hypotheses() const { return hypotheses_; }
  const AgentModel& agent(int i) const { return agents_.at(static_cast<std::size_t>(i)); }
  const std::vector<AgentModel>& agents() const { return agents_; }

  // log l_i(s | theta), cached.
  const Matrix& log_likelihood(int i) const { return log_likelihood_[static_cast<std::size_t>(i)]; }

  // Smallest likelihood entry over every table.
  double alpha() const { return alpha_; }

 private:
  HypothesisSpace hypotheses_;
  std::vector<AgentModel> agents_;
  std::vector<Matrix> log_likelihood_;
  double alpha_ = 0.0;
};

// Natural-log KL divergence d(p || q). Terms with p_i = 0 vanish.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double kl_divergence(const Vector& p, const Vector& q);

inline constexpr double kDefaultTiesTolerance = 1e-9;

struct OptimalSets {
  std::vector<std::vector<int>> per_agent;  // Theta_i
  std::vector<int> common;                  // Theta*
  Matrix divergences;                       // n x m, d(f^i || l_i(.|theta))

  bool assumption_holds() const { return !common.empty(); }
  bool is_optimal(int theta) const;
  std::vector<int> suboptimal(int hypothesis_count) const;
};

OptimalSets optimal_hypothesis_sets(const LikelihoodModel& model,
                                    double ties_tol = kDefaultTiesTolerance);

// [H(theta)]_i = d(f^i || l_i(.|theta)) - d(f^i || l_i(.|theta*)). Checks
// theta* is optimal and that the result is the same for every optimal
// reference.
Vector divergence_gap(const LikelihoodModel& model, int theta, int theta_star,
                      double ties_tol = kDefaultTiesTolerance);

inline constexpr double kDefaultLazyMetropolisConstant = 71.0;

struct RateConstants {
  double c = 0.0;
  double lambda = 0.0;
  double one_minus_lambda = 1.0;  // kept separately; lambda is often 1 - 1e-10
  double delta_bound = 0.0;
};

RateConstants rate_constants(MatrixClass matrix_class, int n, int b, double eta,
                             double lazy_metropolis_constant = kDefaultLazyMetropolisConstant);

struct ScheduleParams {
  MatrixClass matrix_class = MatrixClass::kGeneral;
  int n = 1;
  int b = 1;
  double eta = 1.0;
  double lazy_metropolis_constant = kDefaultLazyMetropolisConstant;

  static ScheduleParams of(const GraphSchedule& schedule,
                           double lazy_metropolis_constant = kDefaultLazyMetropolisConstant);
};

struct RateCertificate {
  ScheduleParams schedule;
  double c = 0.0;
  double lambda = 0.0;
  double one_minus_lambda = 1.0;
  double delta = 0.0;  // value used: max(bound, empirical)
  double delta_bound = 0.0;
  std::optional<double> delta_empirical;
  double alpha = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  std::map<double, long> n_of_rho;
  std::vector<std::string> hypothesis_labels;
  std::vector<int> optimal;       // Theta*
  std::map<int, Vector> h_vectors;  // every hypothesis; zero on Theta*
  // Case-(1) constants, valid for any schedule satisfying the assumption.
  RateConstants general_fallback;

  const char* delta_source() const;
  // Step after which the bound drops below one.
  double crossover_step() const { return 2.0 * gamma1 / gamma2; }
};

// ceil(8 (log alpha)^2 log(1/rho) / gamma2^2 + 1).
long onset_step(double alpha, double gamma2, double rho);
long onset_step(const RateCertificate& cert, double rho);

// `priors` is n x m in probability space.
RateCertificate build_certificate(const LikelihoodModel& model, const ScheduleParams& params,
                                  const Matrix& priors, std::span<const double> rho_list,
                                  std::optional<double> delta_empirical = {},
                                  double ties_tol = kDefaultTiesTolerance);

// exp(-k gamma2 / 2 + gamma1) and its logarithm.
double bound_curve(const RateCertificate& cert, double k);
double log_bound_curve(const RateCertificate& cert, double k);

}  // namespace nonbayes
