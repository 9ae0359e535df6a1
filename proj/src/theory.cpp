#include "nonbayes/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "nonbayes/error.hpp"

namespace nonbayes {

HypothesisSpace::HypothesisSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ValidationError("hypothesis set must not be empty");
  std::set<std::string> seen;
  for (const auto& l : labels_)
    if (!seen.insert(l).second) throw ValidationError("duplicate hypothesis label '" + l + "'");
}

int HypothesisSpace::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ValidationError("unknown hypothesis '" + label + "'");
  return static_cast<int>(it - labels_.begin());
}

LikelihoodModel::LikelihoodModel(HypothesisSpace hypotheses, std::vector<AgentModel> agents,
                                 double tolerance)
    : hypotheses_(std::move(hypotheses)), agents_(std::move(agents)) {
  if (agents_.empty()) throw ValidationError("model needs at least one agent");
  const int m = hypotheses_.size();
  alpha_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const AgentModel& a = agents_[i];
    const std::string who = "agent " + std::to_string(i + 1);
    const auto signals = static_cast<Eigen::Index>(a.alphabet.size());
    if (signals < 1) throw ValidationError(who + ": empty signal alphabet");
    if (a.truth.size() != signals)
      throw ValidationError(who + ": truth has " + std::to_string(a.truth.size()) +
                            " entries but the alphabet has " + std::to_string(signals));
    if (a.likelihood.rows() != signals || a.likelihood.cols() != m)
      throw ValidationError(who + ": likelihood table must be |alphabet| x |hypotheses|");
    if ((a.truth.array() < 0.0).any()) throw ValidationError(who + ": negative truth entry");
    if (std::abs(a.truth.sum() - 1.0) > tolerance) {
      std::ostringstream os;
      os << who << ": truth sums to " << a.truth.sum() << ", expected 1";
      throw ValidationError(os.str());
    }
    for (int p = 0; p < m; ++p) {
      const double col = a.likelihood.col(p).sum();
      if (std::abs(col - 1.0) > tolerance) {
        std::ostringstream os;
        os << who << ", hypothesis '" << hypotheses_.label(p) << "': likelihood sums to " << col
           << ", expected 1";
        throw ValidationError(os.str());
      }
      for (Eigen::Index s = 0; s < signals; ++s) {
        if (!(a.likelihood(s, p) > 0.0)) {
          std::ostringstream os;
          os << who << ", hypothesis '" << hypotheses_.label(p) << "', signal '"
             << a.alphabet[static_cast<std::size_t>(s)]
             << "': likelihood must be strictly positive (positive-likelihood assumption)";
          throw ValidationError(os.str());
        }
      }
    }
    alpha_ = std::min(alpha_, a.likelihood.minCoeff());
    log_likelihood_.push_back(a.likelihood.array().log().matrix());
  }
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("kl_divergence: length mismatch");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw ValidationError("kl_divergence: negative probability");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > 1e-10 || std::abs(sq - 1.0) > 1e-10)
    throw ValidationError("kl_divergence: inputs must sum to 1");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0)
      throw ValidationError("kl_divergence: q vanishes where p is positive (index " +
                            std::to_string(i) + "); divergence is infinite");
    d += p[i] * std::log(p[i] / q[i]);
  }
  return d;
}

double kl_divergence(const Vector& p, const Vector& q) {
  return kl_divergence(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                       std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
}

bool OptimalSets::is_optimal(int theta) const {
  return std::find(common.begin(), common.end(), theta) != common.end();
}

std::vector<int> OptimalSets::suboptimal(int hypothesis_count) const {
  std::vector<int> out;
  for (int p = 0; p < hypothesis_count; ++p)
    if (!is_optimal(p)) out.push_back(p);
  return out;
}

OptimalSets optimal_hypothesis_sets(const LikelihoodModel& model, double ties_tol) {
  const int n = model.agent_count();
  const int m = model.hypothesis_count();
  OptimalSets sets;
  sets.divergences.resize(n, m);
  for (int i = 0; i < n; ++i) {
    const AgentModel& a = model.agent(i);
    for (int p = 0; p < m; ++p) sets.divergences(i, p) = kl_divergence(a.truth, a.likelihood.col(p));
    const double best = sets.divergences.row(i).minCoeff();
    std::vector<int> argmin;
    for (int p = 0; p < m; ++p)
      if (sets.divergences(i, p) <= best + ties_tol) argmin.push_back(p);
    sets.per_agent.push_back(std::move(argmin));
  }
  for (int p = 0; p < m; ++p) {
    bool everywhere = std::all_of(sets.per_agent.begin(), sets.per_agent.end(), [&](const auto& s) {
      return std::find(s.begin(), s.end(), p) != s.end();
    });
    if (everywhere) sets.common.push_back(p);
  }
  return sets;
}

namespace {

Vector gap_from(const Matrix& divergences, int theta, int theta_star) {
  return divergences.col(theta) - divergences.col(theta_star);
}

}  // namespace

Vector divergence_gap(const LikelihoodModel& model, int theta, int theta_star, double ties_tol) {
  const int m = model.hypothesis_count();
  if (theta < 0 || theta >= m || theta_star < 0 || theta_star >= m)
    throw ValidationError("divergence_gap: hypothesis index out of range");
  const OptimalSets sets = optimal_hypothesis_sets(model, ties_tol);
  if (!sets.is_optimal(theta_star))
    throw ValidationError("divergence_gap: reference hypothesis '" +
                          model.hypotheses().label(theta_star) + "' is not in the optimal set");
  Vector h = gap_from(sets.divergences, theta, theta_star);
  const double agree = std::max(1e-10, ties_tol);
  for (int other : sets.common) {
    if ((gap_from(sets.divergences, theta, other) - h).cwiseAbs().maxCoeff() > agree)
      throw Error("divergence_gap: gap depends on the optimal reference ('" +
                  model.hypotheses().label(theta_star) + "' vs '" +
                  model.hypotheses().label(other) + "')");
  }
  return h;
}

RateConstants rate_constants(MatrixClass matrix_class, int n, int b, double eta,
                             double lazy_metropolis_constant) {
  if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("eta must lie in (0, 1]");
  if (n < 1 || b < 1) throw ValidationError("rate constants need n >= 1 and B >= 1");
  const double nn = static_cast<double>(n);
  RateConstants rc;
  // lambda = (1 - x)^(1/B) with 1 - lambda evaluated without cancellation.
  auto root = [&](double x) {
    if (x >= 1.0) {
      rc.lambda = 0.0;
      rc.one_minus_lambda = 1.0;
      return;
    }
    const double log_lambda = std::log1p(-x) / b;
    rc.lambda = std::exp(log_lambda);
    rc.one_minus_lambda = -std::expm1(log_lambda);
  };
  switch (matrix_class) {
    case MatrixClass::kGeneral:
      rc.c = 2.0;
      rc.delta_bound = std::pow(eta, nn * b);
      root(rc.delta_bound);
      break;
    case MatrixClass::kDoublyStochastic:
      rc.c = std::sqrt(2.0);
      rc.delta_bound = 1.0;
      root(eta / (4.0 * nn * nn));
      break;
    case MatrixClass::kLazyMetropolis:
      if (!(lazy_metropolis_constant > 0.0))
        throw ValidationError("lazy Metropolis lambda constant must be positive");
      rc.c = std::sqrt(2.0);
      rc.delta_bound = 1.0;
      rc.one_minus_lambda = 1.0 / (lazy_metropolis_constant * nn * nn);
      rc.lambda = 1.0 - rc.one_minus_lambda;
      break;
  }
  return rc;
}

ScheduleParams ScheduleParams::of(const GraphSchedule& schedule, double lazy_metropolis_constant) {
  return {schedule.matrix_class(), schedule.node_count(), schedule.declared_b(),
          schedule.declared_eta(), lazy_metropolis_constant};
}

const char* RateCertificate::delta_source() const {
  return delta_empirical && *delta_empirical > delta_bound ? "empirical" : "bound";
}

long onset_step(double alpha, double gamma2, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ValidationError("confidence rho must lie in (0, 1)");
  if (!(gamma2 > 0.0)) throw ValidationError("onset step needs a positive gamma2");
  const double la = std::log(alpha);
  const double value = 8.0 * la * la * std::log(1.0 / rho) / (gamma2 * gamma2) + 1.0;
  return static_cast<long>(std::ceil(value));
}

long onset_step(const RateCertificate& cert, double rho) {
  auto it = cert.n_of_rho.find(rho);
  if (it != cert.n_of_rho.end()) return it->second;
  return onset_step(cert.alpha, cert.gamma2, rho);
}

RateCertificate build_certificate(const LikelihoodModel& model, const ScheduleParams& params,
                                  const Matrix& priors, std::span<const double> rho_list,
                                  std::optional<double> delta_empirical, double ties_tol) {
  const int n = model.agent_count();
  const int m = model.hypothesis_count();
  if (params.n != n)
    throw ValidationError("schedule has " + std::to_string(params.n) + " nodes but the model has " +
                          std::to_string(n) + " agents");
  if (priors.rows() != n || priors.cols() != m)
    throw ValidationError("priors must be an agents x hypotheses matrix");

  const OptimalSets sets = optimal_hypothesis_sets(model, ties_tol);
  if (!sets.assumption_holds())
    throw ValidationError(
        "no hypothesis is optimal for every agent (common optimal set is empty); the rate "
        "certificate is undefined");
  for (int i = 0; i < n; ++i)
    for (int s : sets.common)
      if (!(priors(i, s) > 0.0))
        throw ValidationError("agent " + std::to_string(i + 1) + " puts zero prior on optimal "
                              "hypothesis '" + model.hypotheses().label(s) +
                              "' (positive-prior assumption)");

  const std::vector<int> bad = sets.suboptimal(m);
  if (bad.empty())
    throw ValidationError("every hypothesis is optimal; there is nothing to certify");

  RateCertificate cert;
  cert.schedule = params;
  const RateConstants rc =
      rate_constants(params.matrix_class, n, params.b, params.eta, params.lazy_metropolis_constant);
  cert.general_fallback = rate_constants(MatrixClass::kGeneral, n, params.b, params.eta);
  cert.c = rc.c;
  cert.lambda = rc.lambda;
  cert.one_minus_lambda = rc.one_minus_lambda;
  cert.delta_bound = rc.delta_bound;
  cert.delta_empirical = delta_empirical;
  cert.delta = delta_empirical ? std::max(rc.delta_bound, *delta_empirical) : rc.delta_bound;
  cert.alpha = model.alpha();
  cert.hypothesis_labels = model.hypotheses().labels();
  cert.optimal = sets.common;

  const int reference = sets.common.front();
  for (int p = 0; p < m; ++p)
    cert.h_vectors[p] = sets.is_optimal(p) ? Vector(Vector::Zero(n))
                                           : divergence_gap(model, p, reference, ties_tol);

  double gamma1 = -std::numeric_limits<double>::infinity();
  double min_norm = std::numeric_limits<double>::infinity();
  for (int theta : bad) {
    const double norm = cert.h_vectors[theta].sum();
    min_norm = std::min(min_norm, norm);
    for (int star : sets.common) {
      double prior_term = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i)
        prior_term = std::max(prior_term, std::log(priors(i, theta) / priors(i, star)));
      gamma1 = std::max(gamma1, prior_term + cert.c * norm / cert.one_minus_lambda);
    }
  }
  cert.gamma1 = gamma1;
  cert.gamma2 = cert.delta / n * min_norm;
  for (double rho : rho_list) cert.n_of_rho[rho] = onset_step(cert.alpha, cert.gamma2, rho);
  return cert;
}

double log_bound_curve(const RateCertificate& cert, double k) {
  return -0.5 * k * cert.gamma2 + cert.gamma1;
}

double bound_curve(const RateCertificate& cert, double k) {
  return std::exp(log_bound_curve(cert, k));
}

}  // namespace nonbayes
