#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nonbayes/graph.hpp"
#include "nonbayes/theory.hpp"

namespace nonbayes {

struct RunParams {
  long steps = 2000;
  long trials = 500;
  std::uint64_t master_seed = 20150101;
  int record_every = 0;  // 0 picks default_record_every(steps)
  std::vector<double> rho_list = {0.05, 0.1, 0.2};

  int effective_record_every() const;
};

// Everything needed to run an experiment.
struct Scenario {
  std::string name;
  LikelihoodModel model;
  GraphSchedule schedule;
  Matrix priors;  // n x m probabilities, rows sum to one
  double lazy_metropolis_constant = kDefaultLazyMetropolisConstant;
  RunParams run;

  int agent_count() const { return model.agent_count(); }
  int hypothesis_count() const { return model.hypothesis_count(); }
  ScheduleParams schedule_params() const {
    return ScheduleParams::of(schedule, lazy_metropolis_constant);
  }
};

// Six agents, two hypotheses, binary signals with f = (0.1, 0.9). Only agent 1
// can tell the hypotheses apart: l_1(.|theta1) = (0.2, 0.8) and
// l_1(.|theta2) = (0.9, 0.1); agents 2..6 have l = (0.5, 0.5) for both.
// Uniform priors, lazy Metropolis weights on the switching topology, B = 2.
Scenario paper_fig1_scenario(MatrixClass scheme = MatrixClass::kLazyMetropolis);

Matrix uniform_priors(int n, int m);

}  // namespace nonbayes
