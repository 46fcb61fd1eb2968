#pragma once

// Simulated distributed execution: one process per sensor, each seeing only
// its own feature stream and the messages its tree neighbours send it.

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dsf.hpp"
#include "inference.hpp"
#include "kernel.hpp"

namespace seqdmg {

/// Number of reads of a DsfBuffer by a process other than its owner since the
/// last reset. Stays zero unless the isolation contract is broken.
size_t isolation_violations();
void reset_isolation_violations();

class DsfBuffer {
 public:
  explicit DsfBuffer(SensorId owner) : owner_(owner) {}
  void append(Eigen::VectorXd x) { data_.push_back(std::move(x)); }
  size_t size() const { return data_.size(); }
  /// Latest feature vector; a read by a non-owner is counted as a violation.
  const Eigen::VectorXd& latest(SensorId requester) const;

 private:
  SensorId owner_;
  std::vector<Eigen::VectorXd> data_;
};

struct MessageTable {
  SensorId from = 0;
  SensorId to = 0;
  LogTable table;  // scope = table.vars()
};

/// State of one simulated sensor: kernel cache, private DSF buffer and inbox.
class NodeState {
 public:
  NodeState(std::shared_ptr<const DamageModel> model, SensorId id, std::optional<int> window);

  SensorId id() const { return id_; }
  long horizon() const { return kernel_.horizon(); }
  void observe(Eigen::VectorXd x);
  void deliver(MessageTable msg);
  void clear_inbox() { inbox_.clear(); }
  MessageTable send_to(SensorId to) const;
  BeliefTable belief() const;
  const LocalKernel& kernel() const { return kernel_; }

 private:
  std::vector<const LogTable*> incoming(SensorId except) const;

  std::shared_ptr<const DamageModel> model_;
  SensorId id_;
  LocalKernel kernel_;
  DsfBuffer buffer_;
  std::map<SensorId, MessageTable> inbox_;
};

struct DetectionVerdict {
  RuleSpec rule;
  SensorId evaluated_at = 0;
  bool stopped = false;
  std::optional<long> tau;
  double posterior_at_stop = 0.0;
};

struct EdgeTraffic {
  DirectedEdge edge;
  size_t entries = 0;
};

struct StepRecord {
  long n = 0;
  size_t messages = 0;
  size_t entries = 0;
  std::vector<EdgeTraffic> edges;
  std::vector<double> posterior;  // per rule
  std::vector<double> ccdf;       // per rule
  std::vector<bool> stopped;      // per rule, as of this step
};

struct SessionLog {
  std::string method = "MP";
  std::optional<int> window;
  std::vector<StepRecord> steps;
  std::vector<DetectionVerdict> verdicts;
};

/// Distributed detection session driven one time step at a time.
class Session {
 public:
  Session(DamageModel model, std::vector<RuleSpec> rules, std::optional<int> window = std::nullopt,
          std::string method = "MP");

  /// Feeds x_*[N] (one vector per sensor), runs both sweeps, evaluates the
  /// rules that have not stopped yet.
  void step(const std::map<SensorId, Eigen::VectorXd>& features);
  bool done() const;
  long horizon() const { return horizon_; }
  const SessionLog& log() const { return log_; }
  const DamageModel& model() const { return *model_; }
  BeliefTable belief(SensorId id) const { return nodes_.at(id).belief(); }
  const NodeState& node(SensorId id) const { return nodes_.at(id); }

 private:
  std::shared_ptr<const DamageModel> model_;
  std::vector<RuleSpec> rules_;
  std::vector<DirectedEdge> schedule_;
  std::map<SensorId, NodeState> nodes_;
  SessionLog log_;
  long horizon_ = 0;
};

using StreamSet = std::map<SensorId, DsfStream>;

/// Runs until every rule stopped or the streams end. Streams must cover every
/// sensor with equal lengths and matching dimensions.
SessionLog run_session(const DamageModel& model, const StreamSet& streams, const std::vector<RuleSpec>& rules,
                       std::optional<int> window = std::nullopt);

/// Same machinery restricted to one sensor: no messages, every prior of its
/// local domain applied locally. Rule targets must lie inside that domain.
SessionLog run_local_baseline(const DamageModel& model, SensorId sensor, const StreamSet& streams,
                              const std::vector<RuleSpec>& rules, std::optional<int> window = std::nullopt);

struct TrafficSummary {
  size_t steps = 0;
  size_t messages = 0;
  size_t entries = 0;
  size_t bytes = 0;  // 8 bytes per table entry
  std::map<DirectedEdge, size_t> entries_per_edge;
  std::map<SensorId, size_t> bytes_sent;
  std::map<SensorId, size_t> bytes_received;
};

TrafficSummary measure_traffic(const SessionLog& log);

}  // namespace seqdmg
