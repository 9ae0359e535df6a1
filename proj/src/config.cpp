#include "nonbayes/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "nonbayes/learning.hpp"

namespace nonbayes {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& path,
                         const std::string& message) const {
    std::ostringstream os;
    os << source_;
    if (node.IsDefined() && !node.Mark().is_null())
      os << ':' << node.Mark().line + 1 << ':' << node.Mark().column + 1;
    os << ": " << path << ": " << message;
    throw ConfigError(os.str());
  }

  YAML::Node require(const YAML::Node& parent, const std::string& key,
                     const std::string& path) const {
    YAML::Node child = parent[key];
    if (!child.IsDefined() || child.IsNull()) fail(parent, join(path, key), "missing field");
    return child;
  }

  template <typename T>
  T scalar(const YAML::Node& node, const std::string& path, const char* what) const {
    if (!node.IsScalar()) fail(node, path, std::string("expected ") + what);
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, path, std::string("expected ") + what + ", got '" + node.Scalar() + "'");
    }
  }

  double real(const YAML::Node& node, const std::string& path) const {
    const double v = scalar<double>(node, path, "a number");
    if (!std::isfinite(v)) fail(node, path, "must be finite");
    return v;
  }

  Vector probability_row(const YAML::Node& node, const std::string& path, long expected) const {
    if (!node.IsSequence()) fail(node, path, "expected a list of probabilities");
    if (expected >= 0 && static_cast<long>(node.size()) != expected)
      fail(node, path,
           "expected " + std::to_string(expected) + " entries, got " + std::to_string(node.size()));
    Vector v(static_cast<Eigen::Index>(node.size()));
    for (std::size_t s = 0; s < node.size(); ++s) {
      v(static_cast<Eigen::Index>(s)) = real(node[s], path + "[" + std::to_string(s) + "]");
      if (v(static_cast<Eigen::Index>(s)) < 0.0)
        fail(node[s], path + "[" + std::to_string(s) + "]", "probability must be non-negative");
    }
    if (std::abs(v.sum() - 1.0) > kConfigProbabilityTolerance) {
      std::ostringstream os;
      os << std::setprecision(17) << "entries sum to " << v.sum() << ", expected 1";
      fail(node, path, os.str());
    }
    return v;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::string source_;
};

GraphSchedule parse_graph(const Reader& rd, const YAML::Node& g, int n) {
  const std::string path = "graph";
  if (!g.IsMap()) rd.fail(g, path, "expected a mapping");
  MatrixClass scheme = MatrixClass::kGeneral;
  if (g["scheme"]) {
    try {
      scheme = matrix_class_from_string(rd.scalar<std::string>(g["scheme"], "graph.scheme", "a name"));
    } catch (const ConfigError&) {
      throw;
    } catch (const ValidationError& e) {
      rd.fail(g["scheme"], "graph.scheme", e.what());
    }
  }

  std::vector<DirectedGraph> graphs;
  int b = 1;
  if (g["builtin"]) {
    const auto name = rd.scalar<std::string>(g["builtin"], "graph.builtin", "a name");
    if (name != "paper-fig1") rd.fail(g["builtin"], "graph.builtin", "unknown builtin '" + name + "'");
    if (n != 6) rd.fail(g["builtin"], "graph.builtin", "paper-fig1 needs exactly 6 agents");
    if (!g["scheme"]) scheme = MatrixClass::kLazyMetropolis;
    graphs = paper_fig1_graphs();
    b = 2;
  } else {
    const YAML::Node steps = rd.require(g, "steps", path);
    if (!steps.IsSequence() || steps.size() == 0)
      rd.fail(steps, "graph.steps", "expected a non-empty list of edge lists");
    const bool symmetrize = g["symmetrize"] && rd.scalar<bool>(g["symmetrize"], "graph.symmetrize", "a boolean");
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const std::string sp = "graph.steps[" + std::to_string(k) + "]";
      const YAML::Node& list = steps[k];
      if (!list.IsSequence()) rd.fail(list, sp, "expected a list of [from, to] pairs");
      std::vector<Edge> edges;
      for (std::size_t e = 0; e < list.size(); ++e) {
        const std::string ep = sp + "[" + std::to_string(e) + "]";
        const YAML::Node& pair = list[e];
        if (!pair.IsSequence() || pair.size() != 2) rd.fail(pair, ep, "expected [from, to]");
        const int from = rd.scalar<int>(pair[0], ep, "an integer node index");
        const int to = rd.scalar<int>(pair[1], ep, "an integer node index");
        if (from < 1 || from > n || to < 1 || to > n)
          rd.fail(pair, ep, "node index outside [1, " + std::to_string(n) + "]");
        edges.push_back({from - 1, to - 1});
      }
      DirectedGraph dg(n, std::move(edges));
      graphs.push_back(symmetrize ? dg.symmetrized() : dg);
    }
  }
  if (g["B"]) {
    b = rd.scalar<int>(g["B"], "graph.B", "an integer");
    if (b < 1) rd.fail(g["B"], "graph.B", "must be at least 1");
  } else if (!g["builtin"]) {
    rd.fail(g, "graph.B", "missing field");
  }
  std::optional<double> eta;
  if (g["eta"]) {
    eta = rd.real(g["eta"], "graph.eta");
    if (!(*eta > 0.0 && *eta <= 1.0)) rd.fail(g["eta"], "graph.eta", "must lie in (0, 1]");
  }
  try {
    return GraphSchedule::from_graphs(graphs, scheme, b, eta);
  } catch (const ValidationError& e) {
    rd.fail(g, path, e.what());
  }
}

void apply_run(const Reader& rd, const YAML::Node& r, RunParams& run) {
  if (!r) return;
  if (!r.IsMap()) rd.fail(r, "run", "expected a mapping");
  if (r["steps"]) {
    run.steps = rd.scalar<long>(r["steps"], "run.steps", "an integer");
    if (run.steps < 1) rd.fail(r["steps"], "run.steps", "must be at least 1");
  }
  if (r["trials"]) {
    run.trials = rd.scalar<long>(r["trials"], "run.trials", "an integer");
    if (run.trials < 1) rd.fail(r["trials"], "run.trials", "must be at least 1");
  }
  if (r["master_seed"])
    run.master_seed = rd.scalar<std::uint64_t>(r["master_seed"], "run.master_seed", "an unsigned integer");
  if (r["record_every"]) {
    run.record_every = rd.scalar<int>(r["record_every"], "run.record_every", "an integer");
    if (run.record_every < 0) rd.fail(r["record_every"], "run.record_every", "must be non-negative");
  }
  if (r["rho"]) {
    const YAML::Node list = r["rho"];
    if (!list.IsSequence() || list.size() == 0) rd.fail(list, "run.rho", "expected a non-empty list");
    run.rho_list.clear();
    for (std::size_t q = 0; q < list.size(); ++q) {
      const double rho = rd.real(list[q], "run.rho[" + std::to_string(q) + "]");
      if (!(rho > 0.0 && rho < 1.0))
        rd.fail(list[q], "run.rho[" + std::to_string(q) + "]", "must lie in (0, 1)");
      run.rho_list.push_back(rho);
    }
  }
}

Scenario parse_document(const Reader& rd, const YAML::Node& root) {
  if (!root.IsMap()) rd.fail(root, "<root>", "expected a mapping");
  if (root["schema_version"]) {
    const int v = rd.scalar<int>(root["schema_version"], "schema_version", "an integer");
    if (v != kSchemaVersion)
      rd.fail(root["schema_version"], "schema_version",
              "unsupported version " + std::to_string(v) + " (expected " +
                  std::to_string(kSchemaVersion) + ")");
  }

  if (root["builtin"]) {
    const auto name = rd.scalar<std::string>(root["builtin"], "builtin", "a name");
    if (name != "paper-fig1") rd.fail(root["builtin"], "builtin", "unknown builtin '" + name + "'");
    Scenario s = paper_fig1_scenario();
    apply_run(rd, root["run"], s.run);
    return s;
  }

  const YAML::Node hyp = rd.require(root, "hypotheses", "");
  if (!hyp.IsSequence() || hyp.size() == 0) rd.fail(hyp, "hypotheses", "expected a non-empty list");
  std::vector<std::string> labels;
  for (std::size_t p = 0; p < hyp.size(); ++p)
    labels.push_back(rd.scalar<std::string>(hyp[p], "hypotheses[" + std::to_string(p) + "]", "a label"));
  HypothesisSpace space;
  try {
    space = HypothesisSpace(labels);
  } catch (const ValidationError& e) {
    rd.fail(hyp, "hypotheses", e.what());
  }
  const int m = space.size();

  const YAML::Node agents = rd.require(root, "agents", "");
  if (!agents.IsSequence() || agents.size() == 0) rd.fail(agents, "agents", "expected a non-empty list");
  std::vector<AgentModel> models;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string ap = "agents[" + std::to_string(i) + "]";
    const YAML::Node& a = agents[i];
    if (!a.IsMap()) rd.fail(a, ap, "expected a mapping");
    AgentModel am;
    const YAML::Node alpha = rd.require(a, "alphabet", ap);
    if (!alpha.IsSequence() || alpha.size() == 0) rd.fail(alpha, ap + ".alphabet", "expected a non-empty list");
    for (std::size_t s = 0; s < alpha.size(); ++s)
      am.alphabet.push_back(rd.scalar<std::string>(alpha[s], ap + ".alphabet", "a symbol"));
    const long signals = static_cast<long>(am.alphabet.size());
    am.truth = rd.probability_row(rd.require(a, "truth", ap), ap + ".truth", signals);
    const YAML::Node lik = rd.require(a, "likelihood", ap);
    if (!lik.IsMap()) rd.fail(lik, ap + ".likelihood", "expected a mapping from hypothesis to row");
    if (static_cast<int>(lik.size()) != m)
      rd.fail(lik, ap + ".likelihood", "expected one row per hypothesis");
    am.likelihood.resize(signals, m);
    for (int p = 0; p < m; ++p) {
      const std::string lp = ap + ".likelihood." + space.label(p);
      if (!lik[space.label(p)]) rd.fail(lik, lp, "missing row");
      const Vector row = rd.probability_row(lik[space.label(p)], lp, signals);
      for (long s = 0; s < signals; ++s) {
        if (!(row(s) > 0.0))
          rd.fail(lik[space.label(p)], lp,
                  "likelihood of signal '" + am.alphabet[static_cast<std::size_t>(s)] +
                      "' must be strictly positive (positive-likelihood assumption)");
      }
      am.likelihood.col(p) = row;
    }
    models.push_back(std::move(am));
  }
  const int n = static_cast<int>(models.size());

  Matrix priors = uniform_priors(n, m);
  if (root["priors"]) {
    const YAML::Node pr = root["priors"];
    if (pr.IsScalar()) {
      if (pr.Scalar() != "uniform") rd.fail(pr, "priors", "expected 'uniform' or a list of rows");
    } else if (pr.IsSequence()) {
      if (static_cast<int>(pr.size()) != n)
        rd.fail(pr, "priors", "expected one row per agent (" + std::to_string(n) + ")");
      for (int i = 0; i < n; ++i)
        priors.row(i) = rd.probability_row(pr[static_cast<std::size_t>(i)],
                                           "priors[" + std::to_string(i) + "]", m)
                            .transpose();
    } else {
      rd.fail(pr, "priors", "expected 'uniform' or a list of rows");
    }
  }

  const YAML::Node graph = rd.require(root, "graph", "");
  GraphSchedule schedule = parse_graph(rd, graph, n);
  double lazy_c = kDefaultLazyMetropolisConstant;
  if (graph["lazy_metropolis_lambda_constant"]) {
    lazy_c = rd.real(graph["lazy_metropolis_lambda_constant"], "graph.lazy_metropolis_lambda_constant");
    if (!(lazy_c > 0.0)) rd.fail(graph["lazy_metropolis_lambda_constant"],
                                 "graph.lazy_metropolis_lambda_constant", "must be positive");
  }

  RunParams run;
  apply_run(rd, root["run"], run);

  std::string name = root["name"] ? rd.scalar<std::string>(root["name"], "name", "a string") : "scenario";
  return Scenario{
      .name = std::move(name),
      .model = LikelihoodModel(std::move(space), std::move(models), kConfigProbabilityTolerance),
      .schedule = std::move(schedule),
      .priors = std::move(priors),
      .lazy_metropolis_constant = lazy_c,
      .run = run,
  };
}

}  // namespace

long validation_horizon(const GraphSchedule& schedule) {
  return std::lcm(static_cast<long>(schedule.period()), static_cast<long>(schedule.declared_b()));
}

ScenarioConfig validate_scenario(Scenario scenario) {
  const int n = scenario.agent_count();
  const int m = scenario.hypothesis_count();
  if (scenario.schedule.node_count() != n)
    throw ValidationError("graph has " + std::to_string(scenario.schedule.node_count()) +
                          " nodes but there are " + std::to_string(n) + " agents");
  if (scenario.priors.rows() != n || scenario.priors.cols() != m)
    throw ValidationError("priors must have one row per agent and one column per hypothesis");

  ScenarioConfig cfg{
      .scenario = std::move(scenario), .graph_report = {}, .optimal_sets = {}, .warnings = {}};
  cfg.graph_report = validate_schedule(cfg.scenario.schedule, validation_horizon(cfg.scenario.schedule));
  cfg.optimal_sets = optimal_hypothesis_sets(cfg.scenario.model);
  const auto& labels = cfg.scenario.model.hypotheses();
  for (int i = 0; i < n; ++i)
    for (int s : cfg.optimal_sets.common)
      if (!(cfg.scenario.priors(i, s) > 0.0))
        throw ValidationError("priors[" + std::to_string(i) + "]: zero prior on optimal hypothesis '" +
                              labels.label(s) + "' (positive-prior assumption)");
  if (!cfg.optimal_sets.assumption_holds())
    cfg.warnings.push_back(
        "no hypothesis is optimal for every agent; rate certificates are undefined but "
        "simulation can still run");
  if (!cfg.graph_report.ok())
    cfg.warnings.push_back("graph schedule violates the connectivity/weight assumption (" +
                           std::to_string(cfg.graph_report.violations.size()) + " violations)");
  return cfg;
}

ScenarioConfig parse_scenario_text(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << source << ':' << e.mark.line + 1 << ':' << e.mark.column + 1 << ": parse error: " << e.msg;
    throw ConfigError(os.str());
  }
  const Reader rd(source);
  Scenario s = parse_document(rd, root);
  try {
    return validate_scenario(std::move(s));
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

std::vector<std::string> builtin_scenario_names() { return {"paper-fig1"}; }

ScenarioConfig parse_scenario(const std::string& source) {
  for (const auto& name : builtin_scenario_names())
    if (source == name) return validate_scenario(paper_fig1_scenario());
  std::ifstream in(source);
  if (!in) throw ConfigError(source + ": cannot open scenario file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario_text(text.str(), source);
}

std::string to_canonical_yaml(const Scenario& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out.SetSeqFormat(YAML::Flow);
  out << YAML::BeginMap;
  out << YAML::Key << "schema_version" << YAML::Value << kSchemaVersion;
  out << YAML::Key << "name" << YAML::Value << s.name;
  out << YAML::Key << "hypotheses" << YAML::Value << s.model.hypotheses().labels();

  out << YAML::Key << "agents" << YAML::Value << YAML::Block << YAML::BeginSeq;
  for (const AgentModel& a : s.model.agents()) {
    out << YAML::BeginMap;
    out << YAML::Key << "alphabet" << YAML::Value << a.alphabet;
    out << YAML::Key << "truth" << YAML::Value
        << std::vector<double>(a.truth.data(), a.truth.data() + a.truth.size());
    out << YAML::Key << "likelihood" << YAML::Value << YAML::BeginMap;
    for (int p = 0; p < s.hypothesis_count(); ++p) {
      const Vector col = a.likelihood.col(p);
      out << YAML::Key << s.model.hypotheses().label(p) << YAML::Value
          << std::vector<double>(col.data(), col.data() + col.size());
    }
    out << YAML::EndMap << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "priors" << YAML::Value << YAML::Block << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < s.priors.rows(); ++i) {
    const Vector row = s.priors.row(i).transpose();
    out << YAML::Flow << std::vector<double>(row.data(), row.data() + row.size());
  }
  out << YAML::EndSeq;

  out << YAML::Key << "graph" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "steps" << YAML::Value << YAML::Block << YAML::BeginSeq;
  for (const auto& step : s.schedule.steps()) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const Edge& e : step.graph.edges())
      if (e.from != e.to) out << YAML::Flow << std::vector<int>{e.from + 1, e.to + 1};
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "scheme" << YAML::Value << std::string(to_string(s.schedule.matrix_class()));
  out << YAML::Key << "eta" << YAML::Value << s.schedule.declared_eta();
  out << YAML::Key << "B" << YAML::Value << s.schedule.declared_b();
  out << YAML::Key << "lazy_metropolis_lambda_constant" << YAML::Value << s.lazy_metropolis_constant;
  out << YAML::EndMap;

  out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "steps" << YAML::Value << s.run.steps;
  out << YAML::Key << "trials" << YAML::Value << s.run.trials;
  out << YAML::Key << "master_seed" << YAML::Value << s.run.master_seed;
  out << YAML::Key << "record_every" << YAML::Value << s.run.record_every;
  out << YAML::Key << "rho" << YAML::Value << s.run.rho_list;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string scenario_hash(const Scenario& scenario) {
  const std::string text = to_canonical_yaml(scenario);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace nonbayes
