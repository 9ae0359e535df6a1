#include "nonbayes/graph.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "nonbayes/error.hpp"

namespace nonbayes {

std::string_view to_string(MatrixClass c) {
  switch (c) {
    case MatrixClass::kGeneral:
      return "general";
    case MatrixClass::kDoublyStochastic:
      return "doubly_stochastic";
    case MatrixClass::kLazyMetropolis:
      return "lazy_metropolis";
  }
  return "general";
}

MatrixClass matrix_class_from_string(std::string_view name) {
  if (name == "general") return MatrixClass::kGeneral;
  if (name == "doubly_stochastic") return MatrixClass::kDoublyStochastic;
  if (name == "lazy_metropolis") return MatrixClass::kLazyMetropolis;
  throw ValidationError("unknown matrix scheme '" + std::string(name) +
                        "' (expected general, doubly_stochastic or lazy_metropolis)");
}

DirectedGraph::DirectedGraph(int node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  if (node_count_ < 1) throw ValidationError("graph must have at least one node");
  for (const Edge& e : edges_) {
    if (e.from < 0 || e.from >= node_count_ || e.to < 0 || e.to >= node_count_) {
      std::ostringstream os;
      os << "edge (" << e.from + 1 << ", " << e.to + 1 << ") has an endpoint outside [1, "
         << node_count_ << "]";
      throw ValidationError(os.str());
    }
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

bool DirectedGraph::has_edge(int from, int to) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{from, to});
}

bool DirectedGraph::is_symmetric(Edge* offending) const {
  for (const Edge& e : edges_) {
    if (!has_edge(e.to, e.from)) {
      if (offending) *offending = e;
      return false;
    }
  }
  return true;
}

DirectedGraph DirectedGraph::symmetrized() const {
  std::vector<Edge> all = edges_;
  for (const Edge& e : edges_) all.push_back({e.to, e.from});
  return DirectedGraph(node_count_, std::move(all));
}

DirectedGraph DirectedGraph::with_self_loops() const {
  std::vector<Edge> all = edges_;
  for (int v = 0; v < node_count_; ++v) all.push_back({v, v});
  return DirectedGraph(node_count_, std::move(all));
}

namespace {

WeightMatrix equal_in_neighbor_weights(const DirectedGraph& g) {
  const int n = g.node_count();
  WeightMatrix a = WeightMatrix::Zero(n, n);
  for (const Edge& e : g.edges()) a(e.to, e.from) = 1.0;
  for (int i = 0; i < n; ++i) a.row(i) /= a.row(i).sum();
  return a;
}

WeightMatrix lazy_metropolis_weights(const DirectedGraph& g) {
  Edge bad;
  if (!g.is_symmetric(&bad)) {
    std::ostringstream os;
    os << "symmetric weight scheme requires an undirected graph; edge (" << bad.from + 1 << ", "
       << bad.to + 1 << ") has no reverse";
    throw ValidationError(os.str());
  }
  const int n = g.node_count();
  std::vector<int> degree(n, 0);
  for (const Edge& e : g.edges())
    if (e.from != e.to) ++degree[e.from];

  WeightMatrix a = WeightMatrix::Zero(n, n);
  for (const Edge& e : g.edges()) {
    if (e.from == e.to) continue;
    a(e.to, e.from) = 1.0 / (2.0 * std::max(degree[e.from], degree[e.to]));
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) off += a(i, j);
    a(i, i) = 1.0 - off;
  }
  return a;
}

}  // namespace

WeightMatrix build_weight_matrix(const DirectedGraph& graph, MatrixClass scheme) {
  if (graph.node_count() < 1) throw ValidationError("cannot weight an empty graph");
  const DirectedGraph g = graph.with_self_loops();
  switch (scheme) {
    case MatrixClass::kGeneral:
      return equal_in_neighbor_weights(g);
    case MatrixClass::kDoublyStochastic:
    case MatrixClass::kLazyMetropolis:
      return lazy_metropolis_weights(g);
  }
  return equal_in_neighbor_weights(g);
}

double min_positive_entry(const WeightMatrix& a) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) > 0.0) best = std::min(best, a(i, j));
  return best;
}

GraphSchedule::GraphSchedule(std::vector<Step> steps, MatrixClass matrix_class,
                             double declared_eta, int declared_b)
    : steps_(std::move(steps)), matrix_class_(matrix_class), eta_(declared_eta), b_(declared_b) {
  if (steps_.empty()) throw ValidationError("schedule needs at least one step");
  if (!(declared_eta > 0.0 && declared_eta <= 1.0))
    throw ValidationError("declared eta must lie in (0, 1]");
  if (declared_b < 1) throw ValidationError("declared B must be at least 1");
  node_count_ = steps_.front().graph.node_count();
  for (std::size_t s = 0; s < steps_.size(); ++s) {
    const auto& st = steps_[s];
    if (st.graph.node_count() != node_count_ || st.weights.rows() != node_count_ ||
        st.weights.cols() != node_count_) {
      std::ostringstream os;
      os << "schedule step " << s << " does not match node count " << node_count_;
      throw ValidationError(os.str());
    }
  }
}

GraphSchedule GraphSchedule::from_graphs(const std::vector<DirectedGraph>& graphs,
                                         MatrixClass scheme, int declared_b,
                                         std::optional<double> declared_eta) {
  std::vector<Step> steps;
  steps.reserve(graphs.size());
  double eta = 1.0;
  for (const auto& g : graphs) {
    WeightMatrix w = build_weight_matrix(g, scheme);
    eta = std::min(eta, min_positive_entry(w));
    steps.push_back({g.with_self_loops(), std::move(w)});
  }
  return GraphSchedule(std::move(steps), scheme, declared_eta.value_or(eta), declared_b);
}

std::vector<DirectedGraph> paper_fig1_graphs() {
  // Zero-based agents 0..5 stand for agents 1..6.
  const std::vector<Edge> even = {{0, 1}, {1, 2}, {3, 4}};
  const std::vector<Edge> odd = {{2, 3}, {4, 5}, {1, 5}};
  return {DirectedGraph(6, even).symmetrized(), DirectedGraph(6, odd).symmetrized()};
}

GraphSchedule paper_fig1_schedule(MatrixClass scheme) {
  return GraphSchedule::from_graphs(paper_fig1_graphs(), scheme, 2);
}

bool ValidationReport::passed(std::string_view check) const {
  return std::none_of(violations.begin(), violations.end(),
                      [&](const Violation& v) { return v.check == check; });
}

bool is_strongly_connected(int node_count, const std::vector<Edge>& edges,
                           std::vector<int>* unreachable) {
  std::vector<std::vector<int>> out(node_count), in(node_count);
  for (const Edge& e : edges) {
    out[e.from].push_back(e.to);
    in[e.to].push_back(e.from);
  }
  auto reach = [&](const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(node_count, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : adj[v])
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
    }
    return seen;
  };
  const auto fwd = reach(out);
  const auto bwd = reach(in);
  bool ok = true;
  for (int v = 0; v < node_count; ++v) {
    if (!fwd[v] || !bwd[v]) {
      ok = false;
      if (unreachable) unreachable->push_back(v);
    }
  }
  return ok;
}

ValidationReport validate_schedule(const GraphSchedule& schedule, long horizon) {
  ValidationReport report;
  report.horizon = horizon;
  const int n = schedule.node_count();
  const double eta = schedule.declared_eta();
  const bool needs_columns = schedule.matrix_class() != MatrixClass::kGeneral;
  auto flag = [&](std::string check, long k, int i, int j, std::string detail) {
    report.violations.push_back({std::move(check), k, i, j, std::move(detail)});
  };

  for (long k = 0; k < horizon; ++k) {
    const WeightMatrix& a = schedule.weights(k);
    const DirectedGraph& g = schedule.graph(k);
    for (int i = 0; i < n; ++i) {
      const double row = a.row(i).sum();
      if (std::abs(row - 1.0) > kRowSumTolerance)
        flag("row_stochastic", k, i, -1, "row sum " + std::to_string(row));
      if (!(a(i, i) > 0.0)) flag("positive_diagonal", k, i, i, "diagonal entry is not positive");
      for (int j = 0; j < n; ++j) {
        const double w = a(i, j);
        if (w < 0.0) flag("row_stochastic", k, i, j, "negative entry");
        if (w > 0.0 && w < eta)
          flag("eta_floor", k, i, j,
               "entry " + std::to_string(w) + " below declared eta " + std::to_string(eta));
      }
      if (needs_columns) {
        const double col = a.col(i).sum();
        if (std::abs(col - 1.0) > kRowSumTolerance)
          flag("doubly_stochastic", k, -1, i, "column sum " + std::to_string(col));
      }
    }
    for (const Edge& e : g.edges())
      if (!(a(e.to, e.from) > 0.0))
        flag("row_stochastic", k, e.to, e.from, "graph edge carries zero weight");
  }

  const long b = schedule.declared_b();
  for (long start = 0; start + b <= horizon; start += b) {
    std::vector<Edge> window;
    for (long k = start; k < start + b; ++k) {
      const WeightMatrix& a = schedule.weights(k);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (a(i, j) > 0.0) window.push_back({j, i});
    }
    std::vector<int> missing;
    if (!is_strongly_connected(n, window, &missing)) {
      for (int v : missing)
        flag("strong_connectivity", start, 0, v,
             "union graph over steps [" + std::to_string(start) + ", " +
                 std::to_string(start + b - 1) + "] does not connect node 1 and node " +
                 std::to_string(v + 1) + " both ways");
    }
  }
  return report;
}

BackwardProduct::BackwardProduct(const GraphSchedule& schedule, long t)
    : schedule_(&schedule), t_(t), k_(t), product_(schedule.weights(t)) {
  if (t < 0) throw ValidationError("backward product origin must be non-negative");
}

void BackwardProduct::advance() {
  ++k_;
  product_ = schedule_->weights(k_) * product_;
  if (k_ - t_ + 1 > 10000 && (k_ - t_) % 100 == 0) {
    for (Eigen::Index i = 0; i < product_.rows(); ++i) product_.row(i) /= product_.row(i).sum();
  }
}

WeightMatrix backward_product(const GraphSchedule& schedule, long t, long k) {
  if (t > k) {
    throw ValidationError("backward product needs t <= k (got t=" + std::to_string(t) +
                          ", k=" + std::to_string(k) + ")");
  }
  BackwardProduct p(schedule, t);
  while (p.k() < k) p.advance();
  return p.value();
}

double row_spread(const Matrix& p) {
  double spread = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j)
    spread = std::max(spread, p.col(j).maxCoeff() - p.col(j).minCoeff());
  return spread;
}

LimitVector estimate_limit_vector(const GraphSchedule& schedule, long t, double tolerance,
                                  long cap) {
  if (!(tolerance > 0.0)) throw ValidationError("limit-vector tolerance must be positive");
  BackwardProduct p(schedule, t);
  double spread = row_spread(p.value());
  while (spread > tolerance) {
    if (p.k() - t >= cap) {
      std::ostringstream os;
      os << "rows of A_{k:" << t << "} did not agree within " << tolerance << " after " << cap
         << " steps (row spread " << spread << "); the schedule likely violates the "
         << "connectivity assumption";
      throw ConvergenceError(os.str(), spread);
    }
    p.advance();
    spread = row_spread(p.value());
  }
  LimitVector out;
  out.phi = p.value().colwise().mean().transpose();
  out.phi /= out.phi.sum();
  out.origin_time = t;
  out.truncation_horizon = p.k();
  out.achieved_spread = spread;
  return out;
}

DeltaEstimate compute_delta(const GraphSchedule& schedule, long horizon) {
  if (horizon < 1) throw ValidationError("delta horizon must be at least 1");
  const int n = schedule.node_count();
  DeltaEstimate d;
  d.lower_bound = std::pow(schedule.declared_eta(),
                           static_cast<double>(n) * static_cast<double>(schedule.declared_b()));
  d.empirical = std::numeric_limits<double>::infinity();
  d.origin_zero = d.empirical;
  // A periodic schedule has `period` distinct origins.
  for (long t = 0; t < schedule.period(); ++t) {
    BackwardProduct p(schedule, t);
    for (long k = t; k < t + horizon; ++k) {
      if (k > t) p.advance();
      const double col = p.value().colwise().sum().minCoeff();
      d.empirical = std::min(d.empirical, col);
      if (t == 0) d.origin_zero = std::min(d.origin_zero, col);
    }
  }
  if (d.empirical < d.lower_bound - 1e-12) {
    std::ostringstream os;
    os << std::setprecision(17) << "empirical delta " << d.empirical << " is below eta^(nB) = "
       << d.lower_bound << "; the schedule violates the connectivity assumption";
    throw ValidationError(os.str());
  }
  return d;
}

}  // namespace nonbayes
