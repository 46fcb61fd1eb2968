#include "inference.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace seqdmg {

LogTable compute_message(const LogTable& kernel, const std::vector<const LogTable*>& incoming, const VarSet& scope) {
  if (scope.empty()) fail(ErrorKind::Model, "message over an empty scope (sensors share no variable)");
  if (incoming.empty()) return kernel.marginalize_to(scope);
  LogTable product = kernel;
  for (const LogTable* m : incoming) product.add(*m);
  return product.marginalize_to(scope);
}

std::vector<DirectedEdge> message_schedule(const DamageModel& model) {
  std::map<SensorId, SensorId> parent;
  std::vector<SensorId> preorder;
  std::function<void(SensorId, SensorId)> visit = [&](SensorId node, SensorId from) {
    preorder.push_back(node);
    for (SensorId nb : model.neighbors(node)) {
      if (nb == from) continue;
      parent[nb] = node;
      visit(nb, node);
    }
  };
  visit(model.tree.root, 0);

  std::vector<DirectedEdge> schedule;
  for (auto it = preorder.rbegin(); it != preorder.rend(); ++it)
    if (*it != model.tree.root) schedule.emplace_back(*it, parent.at(*it));
  for (SensorId node : preorder)
    for (SensorId nb : model.neighbors(node))
      if (parent.count(nb) && parent.at(nb) == node) schedule.emplace_back(node, nb);
  return schedule;
}

BeliefTable make_belief(SensorId sensor, long horizon, const LogTable& kernel,
                        const std::vector<const LogTable*>& incoming) {
  BeliefTable b{sensor, horizon, kernel};
  for (const LogTable* m : incoming) b.log_prob.add(*m);
  b.log_prob.normalize();
  return b;
}

SweepResult full_sweep(const DamageModel& model, const std::map<SensorId, LogTable>& kernels, long horizon) {
  SweepResult out;
  auto kernel_of = [&](SensorId id) -> const LogTable& {
    auto it = kernels.find(id);
    if (it == kernels.end()) fail(ErrorKind::Model, "no kernel for sensor " + std::to_string(id));
    return it->second;
  };
  auto gather = [&](SensorId at, SensorId except) {
    std::vector<const LogTable*> in;
    for (SensorId nb : model.neighbors(at)) {
      if (nb == except) continue;
      auto it = out.messages.find({nb, at});
      if (it == out.messages.end())
        fail(ErrorKind::Model, "missing message " + std::to_string(nb) + "->" + std::to_string(at));
      in.push_back(&it->second);
    }
    return in;
  };

  for (const auto& [from, to] : message_schedule(model)) {
    const VarSet scope = set_intersection(model.sensor(from).domain, model.sensor(to).domain);
    LogTable msg = compute_message(kernel_of(from), gather(from, to), scope);
    out.entries += msg.size();
    ++out.message_count;
    out.messages[{from, to}] = std::move(msg);
  }
  for (const auto& s : model.sensors) out.beliefs[s.id] = make_belief(s.id, horizon, kernel_of(s.id), gather(s.id, 0));
  return out;
}

namespace {

std::vector<size_t> target_axes(const BeliefTable& belief, const VarSet& targets) {
  if (targets.empty()) fail(ErrorKind::InvalidArgument, "rule target set is empty");
  std::vector<size_t> axes;
  for (VarId j : targets) {
    const int a = belief.log_prob.axis_of(j);
    if (a < 0)
      fail(ErrorKind::Model, "variable " + std::to_string(j) + " is not in the local domain of sensor " +
                                 std::to_string(belief.sensor));
    axes.push_back(static_cast<size_t>(a));
  }
  return axes;
}

struct CornerMasses {
  double all_last = 0.0;      // every target "not yet"
  double some_last = 0.0;     // at least one target "not yet"
  double none_last = 0.0;     // no target "not yet"
  double not_all_last = 0.0;  // at least one target changed
};

// Each mass is summed directly over its own cells so small tails keep full precision.
CornerMasses corner_masses(const BeliefTable& belief, const VarSet& targets) {
  const auto axes = target_axes(belief, targets);
  const auto& t = belief.log_prob;
  const size_t last = t.bins() - 1;
  CornerMasses m;
  Odometer it(t.rank(), t.bins(), std::vector<size_t>(t.rank(), 0));
  size_t flat = 0;
  do {
    size_t n_last = 0;
    for (size_t a : axes) n_last += it.coords()[a] == last ? 1 : 0;
    const double p = std::exp(t[flat++]);
    if (n_last == axes.size()) m.all_last += p;
    else m.not_all_last += p;
    if (n_last == 0) m.none_last += p;
    else m.some_last += p;
  } while (it.next());
  return m;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

double posterior_min(const BeliefTable& belief, const VarSet& targets) {
  return clamp01(corner_masses(belief, targets).not_all_last);
}

double posterior_max(const BeliefTable& belief, const VarSet& targets) {
  return clamp01(corner_masses(belief, targets).none_last);
}

double posterior_single(const BeliefTable& belief, VarId var) { return posterior_max(belief, VarSet{var}); }

std::string RuleSpec::label() const {
  const char* name = "min";
  switch (kind) {
    case RuleKind::Min: name = "min"; break;
    case RuleKind::Max: name = "max"; break;
    case RuleKind::Single: name = "single"; break;
    case RuleKind::SubsetMin: name = "subset-min"; break;
    case RuleKind::SubsetMax: name = "subset-max"; break;
  }
  return std::string(name) + ":" + set_key(targets);
}

RuleSpec parse_rule(const std::string& text, double alpha) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) fail(ErrorKind::InvalidArgument, "rule '" + text + "' lacks ':'");
  const std::string kind = text.substr(0, colon);
  RuleSpec r;
  if (kind == "min") r.kind = RuleKind::Min;
  else if (kind == "max") r.kind = RuleKind::Max;
  else if (kind == "single") r.kind = RuleKind::Single;
  else if (kind == "subset-min") r.kind = RuleKind::SubsetMin;
  else if (kind == "subset-max") r.kind = RuleKind::SubsetMax;
  else fail(ErrorKind::InvalidArgument, "unknown rule kind '" + kind + "'");
  r.targets = parse_set_key(text.substr(colon + 1));
  if (r.targets.empty()) fail(ErrorKind::InvalidArgument, "rule '" + text + "' has no targets");
  if (r.kind == RuleKind::Single && r.targets.size() != 1)
    fail(ErrorKind::InvalidArgument, "single rule takes exactly one variable");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidArgument, "alpha must lie in (0,1)");
  r.alpha = alpha;
  return r;
}

std::vector<RuleSpec> parse_rules(const std::string& text, double alpha) {
  std::vector<RuleSpec> out;
  std::string cur;
  for (char c : text + ";") {
    if (c == ';' || c == '|' || c == ' ') {
      if (!cur.empty()) out.push_back(parse_rule(cur, alpha));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (out.empty()) fail(ErrorKind::InvalidArgument, "no rules given");
  return out;
}

RuleValue evaluate_rule(const BeliefTable& belief, const RuleSpec& rule) {
  const CornerMasses m = corner_masses(belief, rule.targets);
  switch (rule.kind) {
    case RuleKind::Min:
    case RuleKind::SubsetMin:
      return {clamp01(m.not_all_last), clamp01(m.all_last)};
    case RuleKind::Max:
    case RuleKind::SubsetMax:
    case RuleKind::Single:
      break;
  }
  return {clamp01(m.none_last), clamp01(m.some_last)};
}

double single_information(const DamageModel& model, VarId var) {
  const auto& v = model.variable(var);
  double info = -v.prior.log_one_minus_rho();
  for (SensorId i : model.sensors_observing(var)) {
    const auto& dens = model.registry.sensor(i);
    info += kl_divergence(model.registry.model_for(i, VarSet{var}), dens.pre);
  }
  return info;
}

double delay_bound_rule(const DamageModel& model, const RuleSpec& rule) {
  if (!(rule.alpha > 0.0 && rule.alpha < 1.0)) fail(ErrorKind::InvalidArgument, "alpha must lie in (0,1)");
  double denom = 0.0;
  switch (rule.kind) {
    case RuleKind::Single:
    case RuleKind::Min:
    case RuleKind::SubsetMin:
      for (VarId j : rule.targets) denom += single_information(model, j);
      break;
    case RuleKind::Max:
    case RuleKind::SubsetMax: {
      for (VarId j : rule.targets) denom += -model.variable(j).prior.log_one_minus_rho();
      bool covered = false;
      for (const auto& s : model.sensors) {
        if (!is_subset(rule.targets, s.domain)) continue;
        covered = true;
        denom += kl_divergence(model.registry.model_for(s.id, rule.targets), model.registry.sensor(s.id).pre);
      }
      if (!covered)
        fail(ErrorKind::Model, "delay bound undefined: no sensor covers " + format_set(rule.targets));
      break;
    }
  }
  return std::abs(std::log(rule.alpha)) / denom;
}

}  // namespace seqdmg
