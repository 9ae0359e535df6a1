#include "nonbayes/scenario.hpp"

#include "nonbayes/learning.hpp"

namespace nonbayes {

int RunParams::effective_record_every() const {
  return record_every > 0 ? record_every : default_record_every(steps);
}

Matrix uniform_priors(int n, int m) { return Matrix::Constant(n, m, 1.0 / m); }

Scenario paper_fig1_scenario(MatrixClass scheme) {
  const std::vector<std::string> alphabet = {"0", "1"};
  const Vector truth = (Vector(2) << 0.1, 0.9).finished();

  std::vector<AgentModel> agents;
  Matrix informed(2, 2);
  informed << 0.2, 0.9,  //
      0.8, 0.1;
  agents.push_back({alphabet, truth, informed});
  for (int i = 1; i < 6; ++i) agents.push_back({alphabet, truth, Matrix::Constant(2, 2, 0.5)});

  Scenario s{
      .name = "paper-fig1",
      .model = LikelihoodModel(HypothesisSpace({"theta1", "theta2"}), std::move(agents)),
      .schedule = paper_fig1_schedule(scheme),
      .priors = uniform_priors(6, 2),
      .lazy_metropolis_constant = kDefaultLazyMetropolisConstant,
      .run = {},
  };
  return s;
}

}  // namespace nonbayes
