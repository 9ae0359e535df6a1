#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "nonbayes/error.hpp"
#include "nonbayes/scenario.hpp"
#include "nonbayes/theory.hpp"
#include "test_support.hpp"

namespace nonbayes {
namespace {

using testing::Rng;

nlohmann::json load_fixture() {
  std::ifstream in(std::string(NONBAYES_FIXTURE_DIR) + "/certificate_fig1.json");
  return nlohmann::json::parse(in);
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

AgentModel binary_agent(Vector truth, std::initializer_list<Vector> columns) {
  AgentModel a;
  a.alphabet = {"0", "1"};
  a.truth = std::move(truth);
  a.likelihood.resize(2, static_cast<Eigen::Index>(columns.size()));
  Eigen::Index p = 0;
  for (const Vector& c : columns) a.likelihood.col(p++) = c;
  return a;
}

TEST(KlDivergence, IdenticalIsZero) {
  EXPECT_EQ(kl_divergence(vec({0.3, 0.7}), vec({0.3, 0.7})), 0.0);
}

TEST(KlDivergence, HandValues) {
  const nlohmann::json fx = load_fixture();
  const double d1 = kl_divergence(vec({0.1, 0.9}), vec({0.2, 0.8}));
  const double d2 = kl_divergence(vec({0.1, 0.9}), vec({0.9, 0.1}));
  EXPECT_NEAR(d1, 0.03669, 1e-4);
  EXPECT_NEAR(d2, 1.75786, 1e-4);
  EXPECT_NEAR(d1, 0.1 * std::log(0.5) + 0.9 * std::log(1.125), 1e-15);
  EXPECT_NEAR(d2, 0.1 * std::log(1.0 / 9.0) + 0.9 * std::log(9.0), 1e-15);
  EXPECT_NEAR(d1, fx["kl_truth_theta1_agent1"].get<double>(), 1e-15);
  EXPECT_NEAR(d2, fx["kl_truth_theta2_agent1"].get<double>(), 1e-15);
}

TEST(KlDivergence, ZeroMassTermsVanish) {
  EXPECT_NEAR(kl_divergence(vec({0.0, 1.0}), vec({0.5, 0.5})), std::log(2.0), 1e-15);
  EXPECT_EQ(kl_divergence(vec({0.0, 1.0}), vec({0.0, 1.0})), 0.0);
}

TEST(KlDivergence, RejectsUnsupportedMass) {
  EXPECT_THROW(kl_divergence(vec({0.5, 0.5}), vec({0.0, 1.0})), ValidationError);
  EXPECT_THROW(kl_divergence(vec({0.5, 0.5}), vec({0.5, 0.3, 0.2})), ValidationError);
  EXPECT_THROW(kl_divergence(vec({0.6, 0.6}), vec({0.5, 0.5})), ValidationError);
}

TEST(KlDivergence, NonNegativeOnRandomPairs) {
  Rng rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const int size = testing::uniform_int(rng, 1, 8);
    const Vector p = testing::random_simplex(rng, size);
    const Vector q = testing::random_simplex(rng, size, 1e-6);
    EXPECT_GE(kl_divergence(p, q), -1e-12);
    EXPECT_NEAR(kl_divergence(p, p), 0.0, 1e-15);
  }
}

TEST(LikelihoodModel, RejectsBadTables) {
  const HypothesisSpace h({"a", "b"});
  EXPECT_THROW(LikelihoodModel(h, {binary_agent(vec({0.5, 0.5}), {vec({0.5, 0.4}), vec({0.5, 0.5})})}),
               ValidationError);
  EXPECT_THROW(LikelihoodModel(h, {binary_agent(vec({0.5, 0.5}), {vec({1.0, 0.0}), vec({0.5, 0.5})})}),
               ValidationError);
  EXPECT_THROW(LikelihoodModel(h, {binary_agent(vec({0.6, 0.5}), {vec({0.5, 0.5}), vec({0.5, 0.5})})}),
               ValidationError);
  EXPECT_THROW(HypothesisSpace({"a", "a"}), ValidationError);
  EXPECT_THROW(HypothesisSpace(std::vector<std::string>{}), ValidationError);
}

TEST(LikelihoodModel, AlphaIsTableMinimum) {
  const Scenario s = paper_fig1_scenario();
  EXPECT_DOUBLE_EQ(s.model.alpha(), 0.1);
}

TEST(OptimalSets, Fig1Scenario) {
  const Scenario s = paper_fig1_scenario();
  const OptimalSets sets = optimal_hypothesis_sets(s.model);
  EXPECT_EQ(sets.per_agent[0], std::vector<int>({0}));
  for (int i = 1; i < 6; ++i) EXPECT_EQ(sets.per_agent[static_cast<std::size_t>(i)], std::vector<int>({0, 1}));
  EXPECT_EQ(sets.common, std::vector<int>({0}));
  EXPECT_TRUE(sets.assumption_holds());
  EXPECT_EQ(sets.suboptimal(2), std::vector<int>({1}));
}

TEST(OptimalSets, IdenticalAgentsMatchingFirstHypothesis) {
  const Vector l1 = vec({0.3, 0.7});
  const Vector l2 = vec({0.6, 0.4});
  std::vector<AgentModel> agents(3, binary_agent(l1, {l1, l2}));
  const OptimalSets sets = optimal_hypothesis_sets(LikelihoodModel(HypothesisSpace({"a", "b"}), agents));
  EXPECT_TRUE(sets.is_optimal(0));
}

TEST(OptimalSets, DisjointSingletonsFlagged) {
  const Vector l1 = vec({0.3, 0.7});
  const Vector l2 = vec({0.6, 0.4});
  const LikelihoodModel model(HypothesisSpace({"a", "b"}),
                              {binary_agent(l1, {l1, l2}), binary_agent(l2, {l1, l2})});
  const OptimalSets sets = optimal_hypothesis_sets(model);
  EXPECT_TRUE(sets.common.empty());
  EXPECT_FALSE(sets.assumption_holds());
}

TEST(DivergenceGap, Fig1Theta2) {
  const nlohmann::json fx = load_fixture();
  const Scenario s = paper_fig1_scenario();
  const Vector h = divergence_gap(s.model, 1, 0);
  ASSERT_EQ(h.size(), 6);
  EXPECT_NEAR(h(0), 1.72117, 1e-4);
  for (int i = 1; i < 6; ++i) EXPECT_EQ(h(i), 0.0);
  const auto expected = fx["H_theta2"].get<std::vector<double>>();
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(h(i), expected[static_cast<std::size_t>(i)], 1e-14);
  EXPECT_DOUBLE_EQ(h.lpNorm<1>(), h.sum());
}

TEST(DivergenceGap, OptimalHypothesisGivesZero) {
  const Scenario s = paper_fig1_scenario();
  EXPECT_EQ(divergence_gap(s.model, 0, 0), Vector::Zero(6));
}

TEST(DivergenceGap, RejectsSuboptimalReference) {
  const Scenario s = paper_fig1_scenario();
  EXPECT_THROW(divergence_gap(s.model, 0, 1), ValidationError);
}

// Random models with several exactly equivalent optimal hypotheses.
TEST(DivergenceGap, IndependentOfReferenceOnRandomModels) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = testing::uniform_int(rng, 1, 6);
    const int m = testing::uniform_int(rng, 3, 5);
    std::vector<AgentModel> agents;
    for (int i = 0; i < n; ++i) {
      const int signals = testing::uniform_int(rng, 2, 4);
      AgentModel a;
      for (int s = 0; s < signals; ++s) a.alphabet.push_back(std::to_string(s));
      a.likelihood.resize(signals, m);
      a.truth = testing::random_simplex(rng, signals);
      // Hypotheses 0 and 1 are observationally identical for every agent.
      a.likelihood.col(0) = testing::random_simplex(rng, signals, 0.05);
      a.likelihood.col(1) = a.likelihood.col(0);
      for (int p = 2; p < m; ++p) a.likelihood.col(p) = testing::random_simplex(rng, signals, 0.05);
      // Make 0 (and so 1) the best fit: truth equals it.
      a.truth = a.likelihood.col(0);
      agents.push_back(std::move(a));
    }
    std::vector<std::string> labels;
    for (int p = 0; p < m; ++p) labels.push_back("h" + std::to_string(p));
    const LikelihoodModel model(HypothesisSpace(labels), agents);
    const OptimalSets sets = optimal_hypothesis_sets(model);
    ASSERT_TRUE(sets.is_optimal(0) && sets.is_optimal(1));
    for (int theta : sets.suboptimal(m)) {
      const Vector a = divergence_gap(model, theta, 0);
      const Vector b = divergence_gap(model, theta, 1);
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_GE(a.minCoeff(), -1e-12);
      EXPECT_GT(a.maxCoeff(), 0.0);
    }
  }
}

TEST(RateConstants, DoublyStochasticExample) {
  const nlohmann::json fx = load_fixture();
  const RateConstants r = rate_constants(MatrixClass::kDoublyStochastic, 6, 1, 0.25);
  EXPECT_DOUBLE_EQ(r.c, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(r.lambda, 1.0 - 1.0 / 576.0);
  EXPECT_NEAR(r.lambda, fx["lambda_doubly_stochastic_n6_B1_eta_quarter"].get<double>(), 1e-16);
  EXPECT_NEAR(r.one_minus_lambda, 1.0 / 576.0, 1e-18);
  EXPECT_EQ(r.delta_bound, 1.0);
}

TEST(RateConstants, SingleNodeGeneral) {
  const RateConstants r = rate_constants(MatrixClass::kGeneral, 1, 1, 1.0);
  EXPECT_EQ(r.c, 2.0);
  EXPECT_EQ(r.lambda, 0.0);
  EXPECT_EQ(r.one_minus_lambda, 1.0);
  EXPECT_EQ(r.delta_bound, 1.0);
}

TEST(RateConstants, GeneralSixNodes) {
  const nlohmann::json fx = load_fixture();
  const RateConstants r = rate_constants(MatrixClass::kGeneral, 6, 2, 1.0 / 6.0);
  EXPECT_NEAR(r.lambda, fx["lambda_general_n6_B2_eta_sixth"].get<double>(), 1e-16);
  // 1 - (1 - x)^(1/2) ~ x/2 for x = 6^-12
  const double x = std::pow(6.0, -12.0);
  EXPECT_NEAR(r.one_minus_lambda, x / 2.0 + x * x / 8.0, 1e-24);
  EXPECT_NEAR(r.delta_bound, x, 1e-14 * x);
}

TEST(RateConstants, LazyMetropolisConstant) {
  const RateConstants r = rate_constants(MatrixClass::kLazyMetropolis, 6, 2, 0.25, 71.0);
  EXPECT_DOUBLE_EQ(r.c, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(r.one_minus_lambda, 1.0 / (71.0 * 36.0));
  EXPECT_EQ(r.delta_bound, 1.0);
}

TEST(RateConstants, RejectsBadEta) {
  EXPECT_THROW(rate_constants(MatrixClass::kGeneral, 3, 1, 0.0), ValidationError);
  EXPECT_THROW(rate_constants(MatrixClass::kGeneral, 3, 1, 1.5), ValidationError);
  EXPECT_THROW(rate_constants(MatrixClass::kGeneral, 0, 1, 0.5), ValidationError);
}

TEST(Certificate, Fig1DoublyStochasticMatchesFixture) {
  const nlohmann::json fx = load_fixture();
  const Scenario s = paper_fig1_scenario(MatrixClass::kDoublyStochastic);
  ScheduleParams params = s.schedule_params();
  params.b = 1;  // as configured in the worked example
  const std::vector<double> rho = {0.05, 0.1, 0.2};
  const RateCertificate cert = build_certificate(s.model, params, s.priors, rho);
  EXPECT_EQ(cert.delta, 1.0);
  EXPECT_NEAR(cert.gamma2, 1.72117 / 6.0, 1e-4 / 6.0);
  EXPECT_NEAR(cert.gamma2, fx["gamma2_delta1"].get<double>(), 1e-15);
  EXPECT_DOUBLE_EQ(cert.alpha, 0.1);
  for (const auto& [key, value] : fx["N_of_rho"].items())
    EXPECT_EQ(cert.n_of_rho.at(std::stod(key)), value.get<long>()) << key;
  const double direct = 8.0 * std::pow(std::log(0.1), 2) * std::log(10.0) /
                            (cert.gamma2 * cert.gamma2) + 1.0;
  EXPECT_EQ(cert.n_of_rho.at(0.1), static_cast<long>(std::ceil(direct)));
  // Uniform priors: only the divergence term survives.
  EXPECT_NEAR(cert.gamma1, cert.c * cert.h_vectors.at(1).sum() / cert.one_minus_lambda, 1e-9);
}

TEST(Certificate, Fig1LazyGamma1MatchesFixture) {
  const nlohmann::json fx = load_fixture();
  const Scenario s = paper_fig1_scenario();
  const std::vector<double> rho = {0.1};
  const RateCertificate cert = build_certificate(s.model, s.schedule_params(), s.priors, rho);
  EXPECT_NEAR(cert.gamma1, fx["gamma1_uniform_lazy71"].get<double>(), 1e-9);
  EXPECT_EQ(cert.optimal, std::vector<int>({0}));
  EXPECT_EQ(cert.h_vectors.at(0), Vector::Zero(6));
  EXPECT_GT(cert.general_fallback.one_minus_lambda, 0.0);
  EXPECT_STREQ(cert.delta_source(), "bound");
}

TEST(Certificate, EmpiricalDeltaUsedWhenLarger) {
  const Scenario s = paper_fig1_scenario(MatrixClass::kGeneral);
  const std::vector<double> rho = {0.1};
  const ScheduleParams params = s.schedule_params();
  const RateCertificate cert = build_certificate(s.model, params, s.priors, rho, 0.5);
  EXPECT_EQ(cert.delta, 0.5);
  EXPECT_DOUBLE_EQ(cert.delta_bound, std::pow(params.eta, 12));
  EXPECT_STREQ(cert.delta_source(), "empirical");
  const RateCertificate loose = build_certificate(s.model, params, s.priors, rho, 1e-30);
  EXPECT_EQ(loose.delta, loose.delta_bound);
}

TEST(Certificate, PriorTermEntersGamma1) {
  const Scenario s = paper_fig1_scenario();
  Matrix priors = s.priors;
  priors.row(2) << 0.2, 0.8;  // log(0.8 / 0.2) on the suboptimal side
  const std::vector<double> rho = {0.1};
  const RateCertificate base = build_certificate(s.model, s.schedule_params(), s.priors, rho);
  const RateCertificate shifted = build_certificate(s.model, s.schedule_params(), priors, rho);
  EXPECT_NEAR(shifted.gamma1 - base.gamma1, std::log(4.0), 1e-9);
}

TEST(Certificate, Rejections) {
  const Scenario s = paper_fig1_scenario();
  const std::vector<double> rho = {0.1};
  Matrix zero = s.priors;
  zero.row(3) << 0.0, 1.0;
  EXPECT_THROW(build_certificate(s.model, s.schedule_params(), zero, rho), ValidationError);

  const Vector l1 = vec({0.3, 0.7});
  const Vector l2 = vec({0.6, 0.4});
  const LikelihoodModel split(HypothesisSpace({"a", "b"}),
                              {binary_agent(l1, {l1, l2}), binary_agent(l2, {l1, l2})});
  ScheduleParams two{.matrix_class = MatrixClass::kGeneral, .n = 2, .b = 1, .eta = 0.5};
  EXPECT_THROW(build_certificate(split, two, uniform_priors(2, 2), rho), ValidationError);

  const std::vector<double> bad_rho = {1.5};
  EXPECT_THROW(build_certificate(s.model, s.schedule_params(), s.priors, bad_rho), ValidationError);
}

TEST(Certificate, OnsetNonIncreasingInRho) {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const double alpha = testing::uniform(rng, 1e-4, 0.5);
    const double gamma2 = testing::uniform(rng, 1e-3, 2.0);
    double r1 = testing::uniform(rng, 1e-6, 0.999);
    double r2 = testing::uniform(rng, 1e-6, 0.999);
    if (r1 > r2) std::swap(r1, r2);
    EXPECT_GE(onset_step(alpha, gamma2, r1), onset_step(alpha, gamma2, r2));
    EXPECT_GE(onset_step(alpha, gamma2, r2), 1);
  }
}

TEST(Certificate, Gamma2PositiveOnRandomModels) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = testing::uniform_int(rng, 1, 5);
    const int m = testing::uniform_int(rng, 2, 4);
    const LikelihoodModel model = testing::random_model(rng, n, m);
    const OptimalSets sets = optimal_hypothesis_sets(model);
    if (static_cast<int>(sets.common.size()) == m) continue;
    const ScheduleParams params{.matrix_class = MatrixClass::kGeneral, .n = n, .b = 1, .eta = 0.5};
    const std::vector<double> rho = {0.1};
    const RateCertificate cert =
        build_certificate(model, params, testing::random_priors(rng, n, m), rho);
    EXPECT_GT(cert.gamma2, 0.0);
    for (int theta : sets.suboptimal(m)) {
      EXPECT_GE(cert.h_vectors.at(theta).minCoeff(), -1e-12);
      EXPECT_GT(cert.h_vectors.at(theta).maxCoeff(), 0.0);
    }
  }
}

RateCertificate toy_certificate(double gamma1, double gamma2) {
  RateCertificate c;
  c.gamma1 = gamma1;
  c.gamma2 = gamma2;
  return c;
}

TEST(BoundCurve, Examples) {
  const RateCertificate c = toy_certificate(3.0, 0.28686);
  EXPECT_DOUBLE_EQ(bound_curve(c, 0), std::exp(3.0));
  EXPECT_NEAR(bound_curve(c, c.crossover_step()), 1.0, 1e-12);
  EXPECT_NEAR(bound_curve(c, 100), std::exp(3.0 - 14.343), 1e-15);
  EXPECT_NEAR(bound_curve(c, 100), 1.18e-5, 0.01e-5);
}

TEST(BoundCurve, DecreasingAndShiftsWithGamma1) {
  const RateCertificate c = toy_certificate(2.5, 0.1);
  const RateCertificate doubled = toy_certificate(5.0, 0.1);
  for (int k = 0; k < 500; ++k) {
    EXPECT_LT(log_bound_curve(c, k + 1), log_bound_curve(c, k));
    EXPECT_NEAR(log_bound_curve(doubled, k) - log_bound_curve(c, k), 2.5, 1e-12);
  }
}

}  // namespace
}  // namespace nonbayes
