#include "simnet.hpp"

#include <atomic>

#include "shiryaev.hpp"

namespace seqdmg {

namespace {
std::atomic<size_t> g_isolation_violations{0};
}

size_t isolation_violations() { return g_isolation_violations.load(); }
void reset_isolation_violations() { g_isolation_violations = 0; }

const Eigen::VectorXd& DsfBuffer::latest(SensorId requester) const {
  if (requester != owner_) ++g_isolation_violations;
  if (data_.empty()) fail(ErrorKind::Data, "feature buffer of sensor " + std::to_string(owner_) + " is empty");
  return data_.back();
}

NodeState::NodeState(std::shared_ptr<const DamageModel> model, SensorId id, std::optional<int> window)
    : model_(std::move(model)), id_(id), kernel_(*model_, id, window), buffer_(id) {}

void NodeState::observe(Eigen::VectorXd x) {
  buffer_.append(std::move(x));
  kernel_.step(buffer_.latest(id_));
}

void NodeState::deliver(MessageTable msg) {
  if (msg.to != id_) fail(ErrorKind::InvalidArgument, "message delivered to the wrong sensor");
  inbox_[msg.from] = std::move(msg);
}

std::vector<const LogTable*> NodeState::incoming(SensorId except) const {
  std::vector<const LogTable*> in;
  for (SensorId nb : model_->neighbors(id_)) {
    if (nb == except) continue;
    auto it = inbox_.find(nb);
    if (it == inbox_.end())
      fail(ErrorKind::Model, "sensor " + std::to_string(id_) + " has no message from " + std::to_string(nb));
    in.push_back(&it->second.table);
  }
  return in;
}

MessageTable NodeState::send_to(SensorId to) const {
  const VarSet scope = set_intersection(kernel_.domain(), model_->sensor(to).domain);
  return {id_, to, compute_message(kernel_.table(), incoming(to), scope)};
}

BeliefTable NodeState::belief() const { return make_belief(id_, kernel_.horizon(), kernel_.table(), incoming(0)); }

Session::Session(DamageModel model, std::vector<RuleSpec> rules, std::optional<int> window, std::string method)
    : model_(std::make_shared<const DamageModel>(std::move(model))), rules_(std::move(rules)) {
  if (rules_.empty()) fail(ErrorKind::InvalidArgument, "session needs at least one rule");
  if (window && *window < 1) fail(ErrorKind::InvalidArgument, "window must be at least 1");
  log_.method = std::move(method);
  log_.window = window;
  schedule_ = message_schedule(*model_);
  for (SensorId id : model_->sensor_ids()) nodes_.emplace(id, NodeState(model_, id, window));
  for (const auto& r : rules_) {
    for (VarId j : r.targets) model_->variable(j);
    const SensorId at = covering_sensor(*model_, r.targets);
    if (at == 0) fail(ErrorKind::Model, "rule " + r.label() + ": no sensor's local domain covers its targets");
    log_.verdicts.push_back({r, at, false, std::nullopt, 0.0});
  }
}

bool Session::done() const {
  for (const auto& v : log_.verdicts)
    if (!v.stopped) return false;
  return true;
}

void Session::step(const std::map<SensorId, Eigen::VectorXd>& features) {
  for (const auto& s : model_->sensors) {
    auto it = features.find(s.id);
    if (it == features.end()) fail(ErrorKind::Data, "no feature for sensor " + std::to_string(s.id));
    if (it->second.size() != s.dim)
      fail(ErrorKind::Data, "sensor " + std::to_string(s.id) + " feature has dimension " +
                                std::to_string(it->second.size()) + ", expected " + std::to_string(s.dim));
  }
  ++horizon_;
  for (auto& [id, node] : nodes_) {
    node.observe(features.at(id));
    node.clear_inbox();
  }

  StepRecord rec;
  rec.n = horizon_;
  for (const auto& [from, to] : schedule_) {
    MessageTable msg = nodes_.at(from).send_to(to);
    rec.edges.push_back({{from, to}, msg.table.size()});
    rec.entries += msg.table.size();
    ++rec.messages;
    nodes_.at(to).deliver(std::move(msg));
  }

  std::map<SensorId, BeliefTable> beliefs;
  for (size_t r = 0; r < rules_.size(); ++r) {
    auto& verdict = log_.verdicts[r];
    auto it = beliefs.find(verdict.evaluated_at);
    if (it == beliefs.end()) it = beliefs.emplace(verdict.evaluated_at, nodes_.at(verdict.evaluated_at).belief()).first;
    const RuleValue value = evaluate_rule(it->second, rules_[r]);
    if (!verdict.stopped && stopping_decision(value.posterior, rules_[r].alpha) == Verdict::Declare) {
      verdict.stopped = true;
      verdict.tau = horizon_;
      verdict.posterior_at_stop = value.posterior;
    }
    rec.posterior.push_back(value.posterior);
    rec.ccdf.push_back(value.ccdf);
    rec.stopped.push_back(verdict.stopped);
  }
  log_.steps.push_back(std::move(rec));
}

namespace {

void check_streams(const DamageModel& model, const StreamSet& streams, size_t& length) {
  std::optional<size_t> len;
  for (const auto& s : model.sensors) {
    auto it = streams.find(s.id);
    if (it == streams.end()) fail(ErrorKind::Data, "no DSF stream for sensor " + std::to_string(s.id));
    if (it->second.dim != s.dim)
      fail(ErrorKind::Data, "stream of sensor " + std::to_string(s.id) + " has dimension " +
                                std::to_string(it->second.dim) + ", model expects " + std::to_string(s.dim));
    if (len && *len != it->second.length())
      fail(ErrorKind::Data, "misaligned streams: sensor " + std::to_string(s.id) + " has " +
                                std::to_string(it->second.length()) + " steps, others " + std::to_string(*len));
    len = it->second.length();
  }
  length = len.value_or(0);
}

}  // namespace

SessionLog run_session(const DamageModel& model, const StreamSet& streams, const std::vector<RuleSpec>& rules,
                       std::optional<int> window) {
  size_t length = 0;
  check_streams(model, streams, length);
  Session session(model, rules, window);
  for (size_t n = 0; n < length && !session.done(); ++n) {
    std::map<SensorId, Eigen::VectorXd> x;
    for (const auto& s : model.sensors) x[s.id] = streams.at(s.id).features[n];
    session.step(x);
  }
  return session.log();
}

SessionLog run_local_baseline(const DamageModel& model, SensorId sensor, const StreamSet& streams,
                              const std::vector<RuleSpec>& rules, std::optional<int> window) {
  const auto& node = model.sensor(sensor);
  for (const auto& r : rules)
    if (!is_subset(r.targets, node.domain))
      fail(ErrorKind::Model, "rule " + r.label() + " targets variables outside the local domain of sensor " +
                                 std::to_string(sensor));
  auto it = streams.find(sensor);
  if (it == streams.end()) fail(ErrorKind::Data, "no DSF stream for sensor " + std::to_string(sensor));
  DamageModel sub = local_submodel(model, sensor);
  Session session(std::move(sub), rules, window, "LOCAL");
  for (const auto& x : it->second.features) {
    if (session.done()) break;
    session.step({{sensor, x}});
  }
  return session.log();
}

TrafficSummary measure_traffic(const SessionLog& log) {
  TrafficSummary t;
  t.steps = log.steps.size();
  for (const auto& step : log.steps) {
    t.messages += step.messages;
    t.entries += step.entries;
    for (const auto& e : step.edges) {
      t.entries_per_edge[e.edge] += e.entries;
      t.bytes_sent[e.edge.first] += 8 * e.entries;
      t.bytes_received[e.edge.second] += 8 * e.entries;
    }
  }
  t.bytes = 8 * t.entries;
  return t;
}

}  // namespace seqdmg
