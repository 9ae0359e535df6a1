#pragma once

// Generators and independent oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "nonbayes/graph.hpp"
#include "nonbayes/scenario.hpp"
#include "nonbayes/theory.hpp"

namespace nonbayes::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Random probability vector with every entry at least `floor`.
inline Vector random_simplex(Rng& rng, int size, double floor = 0.0) {
  Vector v(size);
  for (int s = 0; s < size; ++s) v(s) = -std::log(uniform(rng, 1e-12, 1.0));
  v /= v.sum();
  v = (v.array() * (1.0 - floor * size) + floor).matrix();
  return v / v.sum();
}

// Edges of a random strongly connected digraph: a random Hamiltonian cycle
// plus extra edges. With `undirected`, a random spanning tree plus extra
// edges, both directions included.
inline std::vector<Edge> random_connected_edges(Rng& rng, int n, bool undirected,
                                                double extra = 0.2) {
  std::vector<Edge> edges;
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  if (undirected) {
    for (int v = 1; v < n; ++v) {
      const int parent = order[static_cast<std::size_t>(uniform_int(rng, 0, v - 1))];
      edges.push_back({parent, order[static_cast<std::size_t>(v)]});
    }
  } else if (n > 1) {
    for (int v = 0; v < n; ++v)
      edges.push_back({order[static_cast<std::size_t>(v)], order[static_cast<std::size_t>((v + 1) % n)]});
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b && uniform(rng) < extra) edges.push_back({a, b});
  if (undirected) {
    const std::size_t count = edges.size();
    for (std::size_t e = 0; e < count; ++e) edges.push_back({edges[e].to, edges[e].from});
  }
  return edges;
}

// Periodic B-connected schedule: each window of B steps splits one random
// strongly connected edge set among its snapshots. Symmetric schemes keep
// both directions of an edge in the same snapshot.
inline GraphSchedule random_schedule(Rng& rng, int n, int b, MatrixClass scheme, int windows = 3) {
  const bool undirected = scheme != MatrixClass::kGeneral;
  std::vector<DirectedGraph> graphs;
  for (int w = 0; w < windows; ++w) {
    std::vector<std::vector<Edge>> parts(static_cast<std::size_t>(b));
    for (const Edge& e : random_connected_edges(rng, n, undirected)) {
      if (undirected && e.from > e.to) continue;
      const auto slot = static_cast<std::size_t>(uniform_int(rng, 0, b - 1));
      parts[slot].push_back(e);
      if (undirected) parts[slot].push_back({e.to, e.from});
    }
    for (auto& p : parts) graphs.emplace_back(n, std::move(p));
  }
  return GraphSchedule::from_graphs(graphs, scheme, b);
}

// Random model over m hypotheses where every agent's truth equals its
// likelihood under hypothesis 0, so hypothesis 0 is always optimal.
inline LikelihoodModel random_model(Rng& rng, int n, int m, int max_signals = 4) {
  std::vector<std::string> labels;
  for (int p = 0; p < m; ++p) labels.push_back("h" + std::to_string(p));
  std::vector<AgentModel> agents;
  for (int i = 0; i < n; ++i) {
    const int signals = uniform_int(rng, 2, max_signals);
    AgentModel a;
    for (int s = 0; s < signals; ++s) a.alphabet.push_back(std::to_string(s));
    a.likelihood.resize(signals, m);
    for (int p = 0; p < m; ++p) a.likelihood.col(p) = random_simplex(rng, signals, 0.02);
    a.truth = a.likelihood.col(0);
    agents.push_back(std::move(a));
  }
  return LikelihoodModel(HypothesisSpace(labels), std::move(agents));
}

inline Matrix random_priors(Rng& rng, int n, int m) {
  Matrix p(n, m);
  for (int i = 0; i < n; ++i) p.row(i) = random_simplex(rng, m, 0.01).transpose();
  return p;
}

// Single-agent Bayes filter in probability space.
inline std::vector<std::vector<double>> bayes_filter(const std::vector<double>& prior,
                                                     const Matrix& likelihood,
                                                     const std::vector<int>& signals) {
  std::vector<std::vector<double>> out = {prior};
  std::vector<double> mu = prior;
  for (int s : signals) {
    double z = 0.0;
    for (std::size_t p = 0; p < mu.size(); ++p) {
      mu[p] *= likelihood(s, static_cast<Eigen::Index>(p));
      z += mu[p];
    }
    for (double& v : mu) v /= z;
    out.push_back(mu);
  }
  return out;
}

}  // namespace nonbayes::testing
