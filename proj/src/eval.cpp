#include "eval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace seqdmg {

void validate_scenario(const DamageModel& model, const ScenarioSpec& scenario) {
  if (scenario.length < 1) fail(ErrorKind::InvalidArgument, "scenario length must be at least 1");
  if (scenario.replications < 1) fail(ErrorKind::InvalidArgument, "scenario needs at least one replication");
  for (const auto& [j, t] : scenario.planted) {
    model.variable(j);
    if (t < 1) fail(ErrorKind::InvalidArgument, "planted change time of variable " + std::to_string(j) + " must be >= 1");
    if (t > scenario.length)
      fail(ErrorKind::InvalidArgument, "planted change time of variable " + std::to_string(j) + " exceeds length");
  }
}

StreamSet generate_streams(const DamageModel& model, const ScenarioSpec& scenario, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  StreamSet out;
  std::map<SensorId, std::map<VarSet, Eigen::MatrixXd>> chol;
  for (const auto& s : model.sensors) out[s.id] = DsfStream{s.id, s.dim, {}};
  for (long t = 1; t <= scenario.length; ++t) {
    for (const auto& s : model.sensors) {
      VarSet active;
      for (VarId j : s.domain) {
        auto it = scenario.planted.find(j);
        if (it != scenario.planted.end() && it->second <= t) active.push_back(j);
      }
      const GaussianModel& g = model.registry.model_for(s.id, active);
      auto& cache = chol[s.id];
      auto it = cache.find(active);
      if (it == cache.end()) it = cache.emplace(active, g.cholesky_lower()).first;
      Eigen::VectorXd z(s.dim);
      for (int k = 0; k < s.dim; ++k) z(k) = normal(rng);
      out[s.id].features.push_back(g.mean() + it->second * z);
    }
  }
  return out;
}

StreamSet generate_streams(const DamageModel& model, const ScenarioSpec& scenario, int rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(scenario.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(scenario.seed >> 32), static_cast<std::uint32_t>(rep)};
  std::mt19937_64 rng(seq);
  return generate_streams(model, scenario, rng);
}

std::optional<long> planted_time(const ScenarioSpec& scenario, const RuleSpec& rule) {
  std::optional<long> lo, hi;
  bool any_never = false;
  for (VarId j : rule.targets) {
    auto it = scenario.planted.find(j);
    if (it == scenario.planted.end()) {
      any_never = true;
      continue;
    }
    lo = lo ? std::min(*lo, it->second) : it->second;
    hi = hi ? std::max(*hi, it->second) : it->second;
  }
  switch (rule.kind) {
    case RuleKind::Min:
    case RuleKind::SubsetMin:
      return lo;
    case RuleKind::Max:
    case RuleKind::SubsetMax:
    case RuleKind::Single:
      break;
  }
  return any_never ? std::nullopt : hi;
}

std::vector<StopTimes> run_replications(const DamageModel& model, const ScenarioSpec& scenario,
                                        const std::vector<RuleSpec>& rules, const std::vector<double>& alpha_grid,
                                        Method method, SensorId local_sensor) {
  validate_scenario(model, scenario);
  if (alpha_grid.empty()) fail(ErrorKind::InvalidArgument, "alpha grid is empty");
  std::vector<RuleSpec> expanded;
  for (const auto& r : rules)
    for (double a : alpha_grid) {
      if (!(a > 0.0 && a < 1.0)) fail(ErrorKind::InvalidArgument, "alpha grid values must lie in (0,1)");
      RuleSpec e = r;
      e.alpha = a;
      expanded.push_back(e);
    }

  if (method == Method::Local) {
    for (const auto& r : rules)
      if (!is_subset(r.targets, model.sensor(local_sensor).domain))
        fail(ErrorKind::Model, "rule " + r.label() + " is not covered by LOCAL sensor " + std::to_string(local_sensor));
  }

  const size_t reps = static_cast<size_t>(scenario.replications);
  std::vector<StopTimes> results(reps);
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (size_t rep = next++; rep < reps; rep = next++) {
      try {
        const StreamSet streams = generate_streams(model, scenario, static_cast<int>(rep));
        const SessionLog log = method == Method::MP
                                   ? run_session(model, streams, expanded, scenario.window)
                                   : run_local_baseline(model, local_sensor, streams, expanded, scenario.window);
        StopTimes stops;
        for (const auto& v : log.verdicts) stops.push_back(v.tau);
        results[rep] = std::move(stops);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = reps;
      }
    }
  };

  unsigned threads = scenario.threads ? scenario.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<size_t>(threads, reps));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return results;
}

std::vector<CurvePoint> summarize_curve(const std::vector<StopTimes>& runs, size_t rule_index, size_t rules_count,
                                        const ScenarioSpec& scenario, const RuleSpec& rule,
                                        const std::vector<double>& alpha_grid, const DamageModel& bound_model) {
  const auto lambda = planted_time(scenario, rule);
  std::vector<CurvePoint> out;
  for (size_t a = 0; a < alpha_grid.size(); ++a) {
    const size_t idx = rule_index * alpha_grid.size() + a;
    CurvePoint p;
    p.alpha = alpha_grid[a];
    p.replications = static_cast<int>(runs.size());
    double delay_sum = 0.0;
    int false_alarms = 0;
    for (const auto& stops : runs) {
      if (stops.size() != rules_count * alpha_grid.size())
        fail(ErrorKind::InvalidArgument, "stop-time record has the wrong shape");
      const auto& tau = stops[idx];
      if (!tau) {
        ++p.censored;
        continue;
      }
      if (!lambda || *tau < *lambda) {
        ++false_alarms;
        continue;
      }
      delay_sum += static_cast<double>(*tau - *lambda);
      ++p.contributing;
    }
    p.fa_rate = runs.empty() ? 0.0 : static_cast<double>(false_alarms) / static_cast<double>(runs.size());
    p.mean_delay = p.contributing ? delay_sum / p.contributing : std::numeric_limits<double>::quiet_NaN();
    RuleSpec r = rule;
    r.alpha = p.alpha;
    try {
      p.bound = delay_bound_rule(bound_model, r);
    } catch (const Error&) {
      p.bound = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(p);
  }
  return out;
}

std::vector<CurvePoint> monte_carlo_curve(const DamageModel& model, const ScenarioSpec& scenario, const RuleSpec& rule,
                                          const std::vector<double>& alpha_grid) {
  const auto runs = run_replications(model, scenario, {rule}, alpha_grid, Method::MP);
  return summarize_curve(runs, 0, 1, scenario, rule, alpha_grid, model);
}

const CurveRow& Comparison::find(const std::string& rule, const std::string& method, double alpha) const {
  for (const auto& row : rows)
    if (row.rule == rule && row.method == method && row.point.alpha == alpha) return row;
  fail(ErrorKind::InvalidArgument, "no curve row for " + rule + " " + method);
}

Comparison compare_mp_local(const DamageModel& model, const ScenarioSpec& scenario, const std::vector<RuleSpec>& rules,
                            const std::vector<double>& alpha_grid, SensorId local_sensor) {
  if (rules.empty()) fail(ErrorKind::InvalidArgument, "no rules to compare");
  Comparison out;
  if (local_sensor == 0) {
    VarSet all;
    for (const auto& r : rules) all.insert(all.end(), r.targets.begin(), r.targets.end());
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    local_sensor = covering_sensor(model, all);
    if (local_sensor == 0) fail(ErrorKind::Model, "no sensor covers every rule target; pick a LOCAL sensor");
  }
  out.local_sensor = local_sensor;

  const auto mp = run_replications(model, scenario, rules, alpha_grid, Method::MP);
  const auto local = run_replications(model, scenario, rules, alpha_grid, Method::Local, local_sensor);
  const DamageModel local_model = local_submodel(model, local_sensor);
  for (size_t r = 0; r < rules.size(); ++r) {
    for (const auto& p : summarize_curve(mp, r, rules.size(), scenario, rules[r], alpha_grid, model))
      out.rows.push_back({rules[r].label(), "MP", p});
    for (const auto& p : summarize_curve(local, r, rules.size(), scenario, rules[r], alpha_grid, local_model))
      out.rows.push_back({rules[r].label(), "LOCAL", p});
  }
  return out;
}

}  // namespace seqdmg
