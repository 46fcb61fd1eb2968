#pragma once

// Exact sum-product inference over the sensor tree and the posterior
// extractors for the min / max / single detection rules.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "log_table.hpp"
#include "model.hpp"

namespace seqdmg {

using DirectedEdge = std::pair<SensorId, SensorId>;  // (from, to)

/// Log message over the shared scope: log-sum-exp, over the sender's other
/// variables, of its kernel plus every incoming message. Throws Model when the
/// scope is empty.
LogTable compute_message(const LogTable& kernel, const std::vector<const LogTable*>& incoming, const VarSet& scope);

/// Collect phase (children to parent, post-order) followed by the distribute
/// phase (parent to children, pre-order) from the model's root. Every directed
/// tree edge appears exactly once.
std::vector<DirectedEdge> message_schedule(const DamageModel& model);

/// Normalized posterior over a sensor's local-domain bins.
struct BeliefTable {
  SensorId sensor = 0;
  long horizon = 0;
  LogTable log_prob;  // sums (in probability space) to 1

  double probability(size_t flat) const { return std::exp(log_prob[flat]); }
};

/// Unnormalized belief: kernel plus all incoming messages, then normalized.
BeliefTable make_belief(SensorId sensor, long horizon, const LogTable& kernel,
                        const std::vector<const LogTable*>& incoming);

struct SweepResult {
  std::map<SensorId, BeliefTable> beliefs;
  std::map<DirectedEdge, LogTable> messages;
  size_t message_count = 0;
  size_t entries = 0;  // table entries over all messages
};

/// Centralized two-phase sweep over already-computed kernels (one per sensor,
/// all at the same horizon and bin count).
SweepResult full_sweep(const DamageModel& model, const std::map<SensorId, LogTable>& kernels, long horizon);

/// P(min_{j in S} lambda_j <= N): mass where some j in S has changed.
double posterior_min(const BeliefTable& belief, const VarSet& targets);
/// P(max_{j in S} lambda_j <= N): mass where no j in S is "not yet".
double posterior_max(const BeliefTable& belief, const VarSet& targets);
/// P(lambda_j <= N).
double posterior_single(const BeliefTable& belief, VarId var);

enum class RuleKind { Min, Max, Single, SubsetMin, SubsetMax };

struct RuleSpec {
  RuleKind kind = RuleKind::Min;
  VarSet targets;
  double alpha = 1e-2;

  std::string label() const;  // e.g. "min:1,3"
};

/// Parses "min:1,3", "max:1,3", "single:3", "subset-min:1,2", "subset-max:1,2".
RuleSpec parse_rule(const std::string& text, double alpha);
/// Comma-separated list of rules, e.g. "min:1,3;max:1,3" or "min:1|single:3".
std::vector<RuleSpec> parse_rules(const std::string& text, double alpha);

struct RuleValue {
  double posterior = 0.0;  // P(lambda_S <= N | x)
  double ccdf = 1.0;       // 1 - posterior, summed directly from the complementary cells
};

/// Evaluates a rule on a belief whose scope covers the rule's targets.
RuleValue evaluate_rule(const BeliefTable& belief, const RuleSpec& rule);

/// Per-variable detectability term -ln(1-rho_j) + sum_{i in Q_j} KL(f_i^{j} || g_i).
double single_information(const DamageModel& model, VarId var);

/// Asymptotic delay |ln alpha| / (prior term + KL term) for the rule.
/// Throws Model for a max rule no sensor covers.
double delay_bound_rule(const DamageModel& model, const RuleSpec& rule);

}  // namespace seqdmg
