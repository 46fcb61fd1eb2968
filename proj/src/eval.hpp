#pragma once

// Synthetic streams with planted change points and Monte Carlo estimates of
// detection delay and false-alarm rate for MP and LOCAL detection.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "simnet.hpp"

namespace seqdmg {

struct ScenarioSpec {
  std::map<VarId, long> planted;  // variables absent here never change
  long length = 0;
  int replications = 200;
  std::uint64_t seed = 1;
  std::optional<int> window;
  unsigned threads = 0;  // 0: hardware concurrency
};

void validate_scenario(const DamageModel& model, const ScenarioSpec& scenario);

/// At each t, sensor i draws from the density of A(t) = {j in S_i : planted_j <= t}.
StreamSet generate_streams(const DamageModel& model, const ScenarioSpec& scenario, std::mt19937_64& rng);
/// Streams of replication `rep`, seeded from (scenario.seed, rep).
StreamSet generate_streams(const DamageModel& model, const ScenarioSpec& scenario, int rep);

/// Planted lambda_S for a rule: min / max / single over the planted times;
/// nullopt when the relevant variables never change.
std::optional<long> planted_time(const ScenarioSpec& scenario, const RuleSpec& rule);

struct CurvePoint {
  double alpha = 0.0;
  double mean_delay = 0.0;  // NaN when no run has tau >= lambda
  double fa_rate = 0.0;
  int censored = 0;
  int contributing = 0;  // runs entering the delay mean
  int replications = 0;
  double bound = 0.0;    // NaN when undefined
  double delay_slope() const { return mean_delay / std::abs(std::log(alpha)); }
};

enum class Method { MP, Local };

/// Per-replication stopping times of each (rule, alpha) pair, in the order
/// rules x alpha_grid (alpha fastest).
using StopTimes = std::vector<std::optional<long>>;

/// Runs all replications of one method. `local_sensor` is used for LOCAL only.
std::vector<StopTimes> run_replications(const DamageModel& model, const ScenarioSpec& scenario,
                                        const std::vector<RuleSpec>& rules, const std::vector<double>& alpha_grid,
                                        Method method, SensorId local_sensor = 0);

std::vector<CurvePoint> summarize_curve(const std::vector<StopTimes>& runs, size_t rule_index, size_t rules_count,
                                        const ScenarioSpec& scenario, const RuleSpec& rule,
                                        const std::vector<double>& alpha_grid, const DamageModel& bound_model);

/// Curve for one rule with MP inference.
std::vector<CurvePoint> monte_carlo_curve(const DamageModel& model, const ScenarioSpec& scenario, const RuleSpec& rule,
                                          const std::vector<double>& alpha_grid);

struct CurveRow {
  std::string rule;
  std::string method;  // "MP" or "LOCAL"
  CurvePoint point;
};

struct Comparison {
  SensorId local_sensor = 0;
  std::vector<CurveRow> rows;  // per rule: MP rows then LOCAL rows, alpha in grid order

  const CurveRow& find(const std::string& rule, const std::string& method, double alpha) const;
};

/// Paired MP and LOCAL curves over identical seeded streams. With
/// local_sensor == 0 the lowest-id sensor covering every rule target is used.
Comparison compare_mp_local(const DamageModel& model, const ScenarioSpec& scenario, const std::vector<RuleSpec>& rules,
                            const std::vector<double>& alpha_grid, SensorId local_sensor = 0);

}  // namespace seqdmg
