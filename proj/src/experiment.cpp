#include "nonbayes/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "nonbayes/config.hpp"
#include "nonbayes/report_io.hpp"

namespace nonbayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr long kTrialsPerChunk = 16;

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Streaming moments for every (record, agent, hypothesis) cell.
struct Moments {
  long count = 0;
  std::vector<double> mean, m2, min, max, log_sum;

  explicit Moments(std::size_t cells)
      : mean(cells, 0.0),
        m2(cells, 0.0),
        min(cells, std::numeric_limits<double>::infinity()),
        max(cells, -std::numeric_limits<double>::infinity()),
        log_sum(cells, kNegInf) {}

  void add(const TrajectoryRecord& rec) {
    ++count;
    const double c = static_cast<double>(count);
    std::size_t x = 0;
    for (const Matrix& lb : rec.log_beliefs)
      for (Eigen::Index i = 0; i < lb.rows(); ++i)
        for (Eigen::Index p = 0; p < lb.cols(); ++p, ++x) {
          const double lv = lb(i, p);
          const double v = std::exp(lv);
          const double d = v - mean[x];
          mean[x] += d / c;
          m2[x] += d * (v - mean[x]);
          min[x] = std::min(min[x], v);
          max[x] = std::max(max[x], v);
          log_sum[x] = log_add(log_sum[x], lv);
        }
  }

  // Chan et al. pairwise combination.
  void merge(const Moments& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(count), nb = static_cast<double>(o.count);
    const double total = na + nb;
    for (std::size_t x = 0; x < mean.size(); ++x) {
      const double d = o.mean[x] - mean[x];
      mean[x] += d * nb / total;
      m2[x] += o.m2[x] + d * d * na * nb / total;
      min[x] = std::min(min[x], o.min[x]);
      max[x] = std::max(max[x], o.max[x]);
      log_sum[x] = log_add(log_sum[x], o.log_sum[x]);
    }
    count += o.count;
  }
};

std::vector<long> recorded_steps(long steps, int every) {
  std::vector<long> out = {0};
  for (long k = every; k <= steps; k += every) out.push_back(k);
  if (out.back() != steps) out.push_back(steps);
  return out;
}

}  // namespace

int resolve_thread_count(int requested) {
  int count = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (count < 1) count = 1;
  if (const char* cap = std::getenv("NONBAYES_THREADS")) {
    const int limit = std::atoi(cap);
    if (limit >= 1) count = std::min(count, limit);
  }
  return count;
}

double MonteCarloSummary::retained_log_belief(long trial, std::size_t r, int agent,
                                              std::size_t q) const {
  const std::size_t sub = suboptimal.size();
  const std::size_t at =
      ((static_cast<std::size_t>(trial) * records() + r) * static_cast<std::size_t>(n) +
       static_cast<std::size_t>(agent)) *
          sub +
      q;
  return retained.at(at);
}

MonteCarloSummary monte_carlo(const Scenario& scenario, long trials, long steps,
                              std::uint64_t master_seed, const MonteCarloOptions& options) {
  if (trials < 1) throw ValidationError("monte_carlo: trials must be at least 1");
  if (steps < 0) throw ValidationError("monte_carlo: negative step count");

  MonteCarloSummary s;
  s.trials = trials;
  s.steps = steps;
  s.record_every = options.record_every > 0 ? options.record_every : default_record_every(steps);
  s.n = scenario.agent_count();
  s.m = scenario.hypothesis_count();
  s.record_steps = recorded_steps(steps, s.record_every);
  s.labels = scenario.model.hypotheses().labels();
  const OptimalSets sets = optimal_hypothesis_sets(scenario.model);
  s.optimal = sets.common;
  s.suboptimal = sets.suboptimal(s.m);
  s.scenario_hash = scenario_hash(scenario);

  const std::size_t cells = s.records() * static_cast<std::size_t>(s.n * s.m);
  const std::size_t per_trial_retained =
      s.records() * static_cast<std::size_t>(s.n) * s.suboptimal.size();
  if (options.retain_suboptimal)
    s.retained.assign(static_cast<std::size_t>(trials) * per_trial_retained, 0.0);

  const long chunks = (trials + kTrialsPerChunk - 1) / kTrialsPerChunk;
  std::vector<Moments> partial(static_cast<std::size_t>(chunks), Moments(cells));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
  std::atomic<long> next{0};

  auto worker = [&] {
    for (long c = next++; c < chunks; c = next++) {
      try {
        const long first = c * kTrialsPerChunk;
        const long last = std::min(trials, first + kTrialsPerChunk);
        for (long t = first; t < last; ++t) {
          const auto seed = derive_trial_seed(master_seed, static_cast<std::uint64_t>(t));
          const TrajectoryRecord rec =
              run_trial(scenario, static_cast<std::size_t>(t), seed, steps, s.record_every);
          partial[static_cast<std::size_t>(c)].add(rec);
          if (options.retain_suboptimal) {
            double* out = s.retained.data() + static_cast<std::size_t>(t) * per_trial_retained;
            for (const Matrix& lb : rec.log_beliefs)
              for (int i = 0; i < s.n; ++i)
                for (int p : s.suboptimal) *out++ = lb(i, p);
          }
        }
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    }
  };

  const int threads = std::min<long>(resolve_thread_count(options.threads), chunks);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (long c = 0; c < chunks; ++c) {
    if (errors[static_cast<std::size_t>(c)]) {
      try {
        std::rethrow_exception(errors[static_cast<std::size_t>(c)]);
      } catch (const std::exception& e) {
        throw Error(std::string("monte_carlo aborted: ") + e.what());
      }
    }
  }

  Moments total(cells);
  for (const Moments& p : partial) total.merge(p);
  s.mean = std::move(total.mean);
  s.min = std::move(total.min);
  s.max = std::move(total.max);
  s.stddev.resize(cells);
  s.log_mean.resize(cells);
  const double log_trials = std::log(static_cast<double>(trials));
  for (std::size_t x = 0; x < cells; ++x) {
    s.stddev[x] = trials > 1 ? std::sqrt(total.m2[x] / static_cast<double>(trials - 1)) : 0.0;
    s.log_mean[x] = total.log_sum[x] - log_trials;
  }
  return s;
}

double binomial_margin(double rho, long trials) {
  return kBinomialZ99 * std::sqrt(rho * (1.0 - rho) / static_cast<double>(trials));
}

double ComplianceReport::max_fraction() const {
  double best = 0.0;
  for (const auto& e : entries) best = std::max(best, e.fraction);
  return best;
}

ComplianceReport check_theorem2(const MonteCarloSummary& summary, const RateCertificate& cert,
                                double rho, long margin_steps) {
  ComplianceReport rep;
  rep.rho = rho;
  rep.onset = onset_step(cert, rho);
  rep.required_steps = rep.onset + margin_steps;
  rep.horizon = summary.steps;
  rep.trials = summary.trials;
  rep.margin = binomial_margin(rho, summary.trials);
  rep.gamma1 = cert.gamma1;
  rep.gamma2 = cert.gamma2;
  rep.certificate = cert;
  rep.scenario_hash = summary.scenario_hash;
  if (summary.steps < rep.required_steps)
    throw InsufficientHorizon("horizon insufficient: the check needs K >= " +
                                  std::to_string(rep.required_steps) + " (N(rho) = " +
                                  std::to_string(rep.onset) + " plus a margin of " +
                                  std::to_string(margin_steps) + "), got K = " +
                                  std::to_string(summary.steps),
                              rep.required_steps);
  if (!summary.has_retained())
    throw ValidationError("check_theorem2 needs per-trial beliefs; run monte_carlo with retention");
  if (summary.optimal != cert.optimal)
    throw ValidationError("certificate and summary disagree on the optimal hypothesis set");

  std::vector<std::size_t> tail;
  rep.vacuous = true;
  for (std::size_t r = 0; r < summary.records(); ++r) {
    if (summary.record_steps[r] < rep.onset) continue;
    tail.push_back(r);
    if (log_bound_curve(cert, static_cast<double>(summary.record_steps[r])) < 0.0)
      rep.vacuous = false;
  }

  const double threshold = rho + rep.margin;
  for (int i = 0; i < summary.n; ++i)
    for (std::size_t q = 0; q < summary.suboptimal.size(); ++q) {
      ComplianceEntry e;
      e.agent = i;
      e.hypothesis = summary.suboptimal[q];
      for (long t = 0; t < summary.trials; ++t) {
        for (std::size_t r : tail) {
          const double k = static_cast<double>(summary.record_steps[r]);
          if (summary.retained_log_belief(t, r, i, q) > log_bound_curve(cert, k)) {
            ++e.violating_trials;
            break;
          }
        }
      }
      e.fraction = static_cast<double>(e.violating_trials) / static_cast<double>(summary.trials);
      e.pass = e.fraction <= threshold;
      rep.pass = rep.pass && e.pass;
      rep.entries.push_back(e);
    }
  return rep;
}

std::vector<double> pointwise_violation_fractions(const MonteCarloSummary& summary,
                                                  const RateCertificate& cert) {
  if (!summary.has_retained())
    throw ValidationError("pointwise violation fractions need per-trial beliefs");
  const std::size_t sub = summary.suboptimal.size();
  std::vector<double> out(summary.records() * static_cast<std::size_t>(summary.n) * sub, 0.0);
  std::size_t x = 0;
  for (std::size_t r = 0; r < summary.records(); ++r) {
    const double lb = log_bound_curve(cert, static_cast<double>(summary.record_steps[r]));
    for (int i = 0; i < summary.n; ++i)
      for (std::size_t q = 0; q < sub; ++q, ++x) {
        long hits = 0;
        for (long t = 0; t < summary.trials; ++t)
          if (summary.retained_log_belief(t, r, i, q) >= lb) ++hits;
        out[x] = static_cast<double>(hits) / static_cast<double>(summary.trials);
      }
  }
  return out;
}

bool SlopeEstimate::passed() const {
  return std::all_of(pass.begin(), pass.end(), [](bool b) { return b; });
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  const double count = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= count;
  my /= count;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

SlopeEstimate estimate_decay_slope(std::span<const TrajectoryRecord> trajectories, int theta,
                                   const RateCertificate& cert, double window_start_fraction,
                                   double tolerance_fraction) {
  if (trajectories.empty()) throw ValidationError("estimate_decay_slope: no trajectories");
  if (!(window_start_fraction > 0.0 && window_start_fraction < 1.0))
    throw ValidationError("estimate_decay_slope: window start fraction must lie in (0, 1)");
  const TrajectoryRecord& head = trajectories.front();
  for (const auto& t : trajectories)
    if (t.steps != head.steps)
      throw ValidationError("estimate_decay_slope: trajectories use different recording grids");
  auto h = cert.h_vectors.find(theta);
  if (h == cert.h_vectors.end()) throw ValidationError("estimate_decay_slope: unknown hypothesis");

  SlopeEstimate est;
  est.hypothesis = theta;
  est.window_end = head.horizon();
  est.window_start = static_cast<long>(std::ceil(window_start_fraction * static_cast<double>(est.window_end)));
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < head.steps.size(); ++r)
    if (head.steps[r] >= est.window_start) rows.push_back(r);
  est.points = rows.size();
  if (rows.size() < 10)
    throw ValidationError("estimate_decay_slope: tail window holds " + std::to_string(rows.size()) +
                          " recorded points; at least 10 are needed");

  const int n = static_cast<int>(head.log_beliefs.front().rows());
  std::vector<double> ks;
  for (std::size_t r : rows) ks.push_back(static_cast<double>(head.steps[r]));
  Matrix avg = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), n);
  for (const auto& t : trajectories)
    for (std::size_t w = 0; w < rows.size(); ++w) avg.row(static_cast<Eigen::Index>(w)) += t.phi(rows[w], theta).transpose();
  avg /= static_cast<double>(trajectories.size());

  est.ceiling = -(cert.delta / cert.schedule.n) * h->second.lpNorm<1>();
  est.tolerance = tolerance_fraction * std::abs(est.ceiling);
  est.slope.resize(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> ys(rows.size());
    for (std::size_t w = 0; w < rows.size(); ++w) ys[w] = avg(static_cast<Eigen::Index>(w), i);
    est.slope(i) = least_squares_slope(ks, ys);
    est.pass.push_back(est.slope(i) <= est.ceiling + est.tolerance);
  }
  return est;
}

ContractionReport verify_lemma1(const GraphSchedule& schedule, std::span<const long> t_list,
                                long k_max, const RateConstants& constants,
                                double limit_tolerance) {
  ContractionReport rep;
  rep.constants = constants;
  const double log_lambda =
      constants.lambda > 0.0 ? std::log1p(-constants.one_minus_lambda) : kNegInf;
  for (long t : t_list) {
    const LimitVector limit = estimate_limit_vector(schedule, t, limit_tolerance);
    ContractionEntry e;
    e.t = t;
    e.limit_horizon = limit.truncation_horizon;
    e.max_excess = kNegInf;
    BackwardProduct p(schedule, t);
    for (long k = t; k <= k_max; ++k) {
      if (k > t) p.advance();
      const Matrix diff = p.value().rowwise() - limit.phi.transpose();
      const double dev = diff.cwiseAbs().maxCoeff();
      const double bound =
          k == t ? constants.c : constants.c * std::exp(static_cast<double>(k - t) * log_lambda);
      if (dev - bound > e.max_excess) {
        e.max_excess = dev - bound;
        e.worst_k = k;
        e.worst_deviation = dev;
        e.worst_bound = bound;
      }
    }
    rep.pass = rep.pass && e.max_excess <= kContractionSlack;
    rep.entries.push_back(e);
  }
  return rep;
}

OrdinalChecks check_ordinal(const MonteCarloSummary& s, int theta, long from_step, long stride) {
  OrdinalChecks out;
  auto note = [&](long k) {
    if (out.first_failure_step < 0 || k < out.first_failure_step) out.first_failure_step = k;
  };
  if (s.n >= 6) {
    for (std::size_t r = 0; r < s.records(); ++r) {
      if (s.record_steps[r] < from_step) continue;
      const double informed = s.log_mean[s.index(r, 0, theta)];
      for (int j = 3; j < 6; ++j)
        if (!(informed < s.log_mean[s.index(r, j, theta)])) {
          out.informed_agent_fastest = false;
          note(s.record_steps[r]);
        }
    }
  }
  std::vector<std::size_t> grid;
  for (std::size_t r = 0; r < s.records(); ++r)
    if (s.record_steps[r] >= from_step && (s.record_steps[r] - from_step) % stride == 0)
      grid.push_back(r);
  for (int i = 0; i < s.n; ++i)
    for (std::size_t g = 1; g < grid.size(); ++g)
      if (!(s.log_mean[s.index(grid[g], i, theta)] < s.log_mean[s.index(grid[g - 1], i, theta)])) {
        out.decreasing = false;
        note(s.record_steps[grid[g]]);
      }
  return out;
}

ReproductionResult reproduce_paper(const std::filesystem::path& output_dir,
                                   const ReproductionOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec || !std::filesystem::is_directory(output_dir))
    throw Error("cannot create output directory " + output_dir.string());

  const Scenario scenario = paper_fig1_scenario();
  const DeltaEstimate delta = compute_delta(scenario.schedule, 1000);
  ReproductionResult res{
      .files = {},
      .summary = {},
      .certificate = build_certificate(scenario.model, scenario.schedule_params(), scenario.priors,
                                       options.rho_list, delta.empirical),
      .compliance = {},
      .skipped = {},
      .ordinal = {},
  };

  long steps = options.steps;
  if (steps <= 0) {
    const double smallest = *std::min_element(options.rho_list.begin(), options.rho_list.end());
    steps = std::max<long>(2000, onset_step(res.certificate, smallest) + kDefaultHorizonMargin);
  }
  MonteCarloOptions mc;
  mc.threads = options.threads;
  res.summary = monte_carlo(scenario, options.trials, steps, options.master_seed, mc);
  for (double rho : options.rho_list) {
    try {
      res.compliance.push_back(check_theorem2(res.summary, res.certificate, rho));
    } catch (const InsufficientHorizon& e) {
      res.skipped.push_back({.rho = rho, .required_steps = e.required_steps(), .horizon = steps});
    }
  }
  const int theta2 = scenario.model.hypotheses().index_of("theta2");
  res.ordinal = check_ordinal(res.summary, theta2);

  auto open = [&](const char* name) {
    const auto path = output_dir / name;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    res.files.push_back(path);
    return out;
  };
  {
    auto out = open("summary.csv");
    write_summary_csv(out, res.summary);
  }
  {
    auto out = open("violations.csv");
    write_violations_csv(out, res.compliance, res.summary);
  }
  {
    auto out = open("figure2.csv");
    const int agents[] = {1, 4, 5, 6};
    write_figure2_csv(out, res.summary, res.certificate, theta2, agents);
  }
  write_json_file(output_dir / "certificate.json", to_json(res.certificate));
  res.files.push_back(output_dir / "certificate.json");

  nlohmann::json compliance = compliance_json(res.compliance, res.skipped, res.summary);
  compliance["master_seed"] = options.master_seed;
  compliance["ordinal"] = {{"informed_agent_fastest", res.ordinal.informed_agent_fastest},
                           {"decreasing", res.ordinal.decreasing}};
  write_json_file(output_dir / "compliance.json", compliance);
  res.files.push_back(output_dir / "compliance.json");
  return res;
}

}  // namespace nonbayes
