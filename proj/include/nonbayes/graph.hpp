#pragma once

// Time-varying directed communication graphs, their mixing matrices, and the
// backward products A_{k:t} = A_k ... A_{t+1} A_t that drive the consensus
// part of the belief dynamics.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nonbayes {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Row-stochastic mixing matrix; [A]_{ij} is the weight agent i puts on j.
using WeightMatrix = Matrix;

enum class MatrixClass { kGeneral, kDoublyStochastic, kLazyMetropolis };

std::string_view to_string(MatrixClass c);
MatrixClass matrix_class_from_string(std::string_view name);

// Directed edge (from, to): `from` sends its belief to `to`. Zero-based.
struct Edge {
  int from = 0;
  int to = 0;
  auto operator<=>(const Edge&) const = default;
};

class DirectedGraph {
 public:
  DirectedGraph() = default;
  // Throws ValidationError on out-of-range endpoints. Duplicates collapse.
  DirectedGraph(int node_count, std::vector<Edge> edges);

  int node_count() const { return node_count_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_edge(int from, int to) const;
  bool is_symmetric(Edge* offending = nullptr) const;

  // Same graph with every reverse edge added.
  DirectedGraph symmetrized() const;
  // Same graph with an explicit self-loop at every node.
  DirectedGraph with_self_loops() const;

 private:
  int node_count_ = 0;
  std::vector<Edge> edges_;  // sorted, unique
};

// Weight construction. Self-loops are added implicitly. kDoublyStochastic
// and kLazyMetropolis both yield the lazy Metropolis matrix and require a
// symmetric edge set.
WeightMatrix build_weight_matrix(const DirectedGraph& graph, MatrixClass scheme);

// Smallest strictly positive entry.
double min_positive_entry(const WeightMatrix& a);

// A periodic schedule: step k uses template entry k mod period().
class GraphSchedule {
 public:
  struct Step {
    DirectedGraph graph;
    WeightMatrix weights;
  };

  GraphSchedule(std::vector<Step> steps, MatrixClass matrix_class, double declared_eta,
                int declared_b);

  // Builds weights from each snapshot with `scheme`. When `declared_eta` is
  // empty the smallest positive weight over the period is declared.
  static GraphSchedule from_graphs(const std::vector<DirectedGraph>& graphs, MatrixClass scheme,
                                   int declared_b, std::optional<double> declared_eta = {});

  int node_count() const { return node_count_; }
  int period() const { return static_cast<int>(steps_.size()); }
  MatrixClass matrix_class() const { return matrix_class_; }
  double declared_eta() const { return eta_; }
  int declared_b() const { return b_; }

  const Step& step(long k) const { return steps_[static_cast<std::size_t>(k % period())]; }
  const WeightMatrix& weights(long k) const { return step(k).weights; }
  const DirectedGraph& graph(long k) const { return step(k).graph; }
  const std::vector<Step>& steps() const { return steps_; }

 private:
  std::vector<Step> steps_;
  MatrixClass matrix_class_;
  double eta_;
  int b_;
  int node_count_;
};

// Builtin switching topology with six agents: the 1-2 link is present on
// even steps only and the links among agents 2..6 alternate between two
// patterns. Union over any two consecutive steps is connected (B = 2).
std::vector<DirectedGraph> paper_fig1_graphs();
GraphSchedule paper_fig1_schedule(MatrixClass scheme = MatrixClass::kLazyMetropolis);

struct Violation {
  std::string check;  // row_stochastic | positive_diagonal | eta_floor | ...
  long k = 0;
  int i = -1;  // zero-based; -1 when not applicable
  int j = -1;
  std::string detail;
};

struct ValidationReport {
  long horizon = 0;
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool passed(std::string_view check) const;
};

inline constexpr double kRowSumTolerance = 1e-12;

// Checks the graph assumption for every k in [0, horizon): row sums, positive
// diagonals, eta floor on positive entries, positive weights on graph edges,
// column sums for doubly stochastic classes, and strong connectivity of the
// union graph over each complete window [wB, (w+1)B - 1].
ValidationReport validate_schedule(const GraphSchedule& schedule, long horizon);

// Strongly connected iff every node reaches node 0 and is reached from it.
bool is_strongly_connected(int node_count, const std::vector<Edge>& edges,
                           std::vector<int>* unreachable = nullptr);

// A_k ... A_{t+1} A_t. Throws ValidationError when t > k or t < 0.
WeightMatrix backward_product(const GraphSchedule& schedule, long t, long k);

// Incremental A_{k:t} for k = t, t+1, ... Rows are re-normalized every 100
// steps once the product is longer than 10^4 factors.
class BackwardProduct {
 public:
  BackwardProduct(const GraphSchedule& schedule, long t);

  long t() const { return t_; }
  long k() const { return k_; }
  const WeightMatrix& value() const { return product_; }
  void advance();

 private:
  const GraphSchedule* schedule_;
  long t_;
  long k_;
  WeightMatrix product_;
};

// max_j (max_i [P]_{ij} - min_i [P]_{ij}).
double row_spread(const Matrix& p);

struct LimitVector {
  Vector phi;
  long origin_time = 0;
  long truncation_horizon = 0;  // k at which rows agreed
  double achieved_spread = 0.0;
};

inline constexpr long kDefaultLimitHorizonCap = 100000;

// Estimates phi_t as the mean row of A_{k:t} once the rows agree within
// `tolerance`. Throws ConvergenceError when `cap` steps do not suffice.
LimitVector estimate_limit_vector(const GraphSchedule& schedule, long t, double tolerance,
                                  long cap = kDefaultLimitHorizonCap);

struct DeltaEstimate {
  // min over origins t and t <= k < t + horizon of the minimum column sum of
  // A_{k:t}. Bounds n * phi_t from below for every t.
  double empirical = 0.0;
  // The same minimum restricted to t = 0. It bounds n * phi_0 only.
  double origin_zero = 0.0;
  double lower_bound = 0.0;  // eta^(n B)
};

// Throws ValidationError when the empirical value falls below the bound,
// which only happens for schedules that break the connectivity assumption.
DeltaEstimate compute_delta(const GraphSchedule& schedule, long horizon);

}  // namespace nonbayes
