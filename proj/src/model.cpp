#include "model.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>

namespace seqdmg {

const SensorNode& DamageModel::sensor(SensorId id) const {
  for (const auto& s : sensors)
    if (s.id == id) return s;
  fail(ErrorKind::Model, "unknown sensor " + std::to_string(id));
}

const DamageVariable& DamageModel::variable(VarId id) const {
  for (const auto& v : variables)
    if (v.id == id) return v;
  fail(ErrorKind::Model, "unknown damage variable " + std::to_string(id));
}

bool DamageModel::has_sensor(SensorId id) const {
  return std::any_of(sensors.begin(), sensors.end(), [&](const SensorNode& s) { return s.id == id; });
}

std::vector<SensorId> DamageModel::sensor_ids() const {
  std::vector<SensorId> ids;
  for (const auto& s : sensors) ids.push_back(s.id);
  return ids;
}

VarSet DamageModel::variable_ids() const {
  VarSet ids;
  for (const auto& v : variables) ids.push_back(v.id);
  return ids;
}

std::vector<SensorId> DamageModel::neighbors(SensorId id) const {
  std::vector<SensorId> out;
  for (const auto& [a, b] : tree.edges) {
    if (a == id) out.push_back(b);
    if (b == id) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<SensorId> DamageModel::sensors_observing(VarId var) const {
  std::vector<SensorId> out;
  for (const auto& s : sensors)
    if (std::binary_search(s.domain.begin(), s.domain.end(), var)) out.push_back(s.id);
  return out;
}

std::vector<Violation> validate_tree(const DamageModel& model) {
  std::vector<Violation> out;
  const auto ids = model.sensor_ids();
  std::map<SensorId, size_t> index;
  for (size_t k = 0; k < ids.size(); ++k) index[ids[k]] = k;

  if (!index.count(model.tree.root))
    out.push_back({"bad-root", "root sensor " + std::to_string(model.tree.root) + " does not exist"});

  std::vector<size_t> parent(ids.size());
  std::iota(parent.begin(), parent.end(), size_t{0});
  auto find = [&](size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  std::set<std::pair<SensorId, SensorId>> seen;
  std::vector<std::pair<SensorId, SensorId>> good_edges;
  for (const auto& [a, b] : model.tree.edges) {
    const std::string name = std::to_string(a) + "-" + std::to_string(b);
    if (!index.count(a) || !index.count(b)) {
      out.push_back({"bad-edge", "edge " + name + " references an unknown sensor"});
      continue;
    }
    if (a == b) {
      out.push_back({"bad-edge", "edge " + name + " is a self-loop"});
      continue;
    }
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) {
      out.push_back({"cycle", "edge " + name + " is duplicated"});
      continue;
    }
    const auto shared = set_intersection(model.sensor(a).domain, model.sensor(b).domain);
    if (shared.empty()) out.push_back({"no-shared-variable", "edge " + name + ": no shared variable"});
    const size_t ra = find(index[a]), rb = find(index[b]);
    if (ra == rb) {
      out.push_back({"cycle", "edge " + name + " closes a cycle"});
      continue;
    }
    parent[ra] = rb;
    good_edges.push_back({a, b});
  }

  std::set<size_t> roots;
  for (size_t k = 0; k < ids.size(); ++k) roots.insert(find(k));
  if (roots.size() > 1) {
    std::string msg = "sensor graph is disconnected into " + std::to_string(roots.size()) + " components";
    out.push_back({"disconnected", msg});
  }

  // Running intersection: sensors containing j must induce a connected subtree.
  for (const auto& var : model.variables) {
    const auto holders = model.sensors_observing(var.id);
    if (holders.size() <= 1) continue;
    std::set<SensorId> holder_set(holders.begin(), holders.end());
    std::set<SensorId> reached{holders.front()};
    std::queue<SensorId> frontier;
    frontier.push(holders.front());
    while (!frontier.empty()) {
      const SensorId s = frontier.front();
      frontier.pop();
      for (const auto& [a, b] : good_edges) {
        SensorId other = a == s ? b : (b == s ? a : 0);
        if (other && holder_set.count(other) && reached.insert(other).second) frontier.push(other);
      }
    }
    if (reached.size() != holder_set.size()) {
      std::string list;
      for (SensorId s : holders) list += (list.empty() ? "" : ",") + std::to_string(s);
      out.push_back({"running-intersection", "variable " + std::to_string(var.id) + ": sensors {" + list +
                                                 "} containing it are not connected through sensors containing it"});
    }
  }
  return out;
}

void cross_reference(DamageModel& model) {
  if (model.variables.empty()) fail(ErrorKind::Model, "model has no damage variables");
  if (model.sensors.empty()) fail(ErrorKind::Model, "model has no sensors");
  std::sort(model.variables.begin(), model.variables.end(),
            [](const DamageVariable& a, const DamageVariable& b) { return a.id < b.id; });
  std::sort(model.sensors.begin(), model.sensors.end(),
            [](const SensorNode& a, const SensorNode& b) { return a.id < b.id; });
  for (size_t k = 0; k < model.variables.size(); ++k)
    if (model.variables[k].id != static_cast<VarId>(k + 1))
      fail(ErrorKind::Model, "damage variable ids must be exactly 1.." + std::to_string(model.variables.size()));
  for (size_t k = 1; k < model.sensors.size(); ++k)
    if (model.sensors[k].id == model.sensors[k - 1].id)
      fail(ErrorKind::Model, "duplicate sensor id " + std::to_string(model.sensors[k].id));

  const VarSet vars = model.variable_ids();
  bool explicit_ownership = false;
  for (auto& s : model.sensors) {
    if (s.id <= 0) fail(ErrorKind::Model, "sensor ids must be positive");
    if (s.domain.empty()) fail(ErrorKind::Model, "sensor " + std::to_string(s.id) + " has an empty local domain");
    if (s.domain.size() > 20) fail(ErrorKind::Model, "sensor " + std::to_string(s.id) + " local domain is too large");
    std::sort(s.domain.begin(), s.domain.end());
    if (std::adjacent_find(s.domain.begin(), s.domain.end()) != s.domain.end())
      fail(ErrorKind::Model, "sensor " + std::to_string(s.id) + " repeats a variable in its domain");
    for (VarId j : s.domain)
      if (!std::binary_search(vars.begin(), vars.end(), j))
        fail(ErrorKind::Model, "sensor " + std::to_string(s.id) + " references unknown variable " + std::to_string(j));
    std::sort(s.owned_priors.begin(), s.owned_priors.end());
    if (!s.owned_priors.empty()) explicit_ownership = true;
    if (!is_subset(s.owned_priors, s.domain))
      fail(ErrorKind::Model, "sensor " + std::to_string(s.id) + " owns a prior outside its local domain");
    if (s.dim < 1) fail(ErrorKind::Model, "sensor " + std::to_string(s.id) + " has non-positive DSF dimension");
  }

  for (VarId j : vars) {
    const auto holders = model.sensors_observing(j);
    if (holders.empty()) fail(ErrorKind::Model, "variable " + std::to_string(j) + " is not observed by any sensor");
    if (!explicit_ownership) {
      for (auto& s : model.sensors)
        if (s.id == holders.front()) s.owned_priors.push_back(j);
    }
  }
  for (VarId j : vars) {
    int owners = 0;
    for (const auto& s : model.sensors)
      owners += std::binary_search(s.owned_priors.begin(), s.owned_priors.end(), j) ? 1 : 0;
    if (owners != 1)
      fail(ErrorKind::Model, "prior of variable " + std::to_string(j) + " is owned by " + std::to_string(owners) +
                                 " sensors; exactly one is required");
  }

  for (const auto& s : model.sensors) {
    if (!model.registry.has_sensor(s.id))
      fail(ErrorKind::Model, "no densities for sensor " + std::to_string(s.id));
    const auto& dens = model.registry.sensor(s.id);
    if (dens.pre.dim() != s.dim)
      fail(ErrorKind::Model, "sensor " + std::to_string(s.id) + " pre-change model has dimension " +
                                 std::to_string(dens.pre.dim()) + ", expected " + std::to_string(s.dim));
    for (const auto& [subset, g] : dens.post) {
      if (!is_subset(subset, s.domain))
        fail(ErrorKind::Model, "sensor " + std::to_string(s.id) + " has a density for subset " + format_set(subset) +
                                   " outside its local domain");
      if (g.dim() != s.dim)
        fail(ErrorKind::Model, "sensor " + std::to_string(s.id) + " subset " + format_set(subset) +
                                   " model has dimension " + std::to_string(g.dim()) + ", expected " +
                                   std::to_string(s.dim));
    }
    const auto missing = model.registry.missing_subsets(s.id, s.domain);
    if (!missing.empty()) {
      std::string msg = "model incomplete:";
      for (const auto& m : missing) msg += " sensor " + std::to_string(s.id) + ", subset " + format_set(m) + ";";
      msg.pop_back();
      fail(ErrorKind::Model, msg);
    }
  }
  if (model.tree.root == 0) model.tree.root = model.sensors.front().id;
}

DamageModel build_model(DamageModel draft) {
  cross_reference(draft);
  const auto violations = validate_tree(draft);
  if (!violations.empty()) {
    std::string msg = "invalid sensor tree:";
    for (const auto& v : violations) msg += " [" + v.kind + "] " + v.message + ";";
    msg.pop_back();
    fail(ErrorKind::Model, msg);
  }
  return draft;
}

SensorId covering_sensor(const DamageModel& model, const VarSet& targets) {
  for (const auto& s : model.sensors)
    if (is_subset(targets, s.domain)) return s.id;
  return 0;
}

DamageModel local_submodel(const DamageModel& model, SensorId id) {
  const auto& node = model.sensor(id);
  DamageModel sub;
  // Not passed through cross_reference: ids here need not be 1..d.
  for (VarId j : node.domain) sub.variables.push_back(model.variable(j));
  SensorNode s = node;
  s.owned_priors = node.domain;
  sub.sensors.push_back(s);
  sub.tree.root = id;
  sub.registry.set_sensor(id, model.registry.sensor(id));
  return sub;
}

DamageModel with_root(const DamageModel& model, SensorId root) {
  if (!model.has_sensor(root)) fail(ErrorKind::Model, "root sensor " + std::to_string(root) + " does not exist");
  DamageModel out = model;
  out.tree.root = root;
  return out;
}

double local_kernel(const DamageModel& model, SensorId id, const std::map<VarId, long>& assignment,
                    const std::vector<Eigen::VectorXd>& history) {
  const auto& node = model.sensor(id);
  const long horizon = static_cast<long>(history.size());
  double total = 0.0;
  for (VarId j : node.domain) {
    auto it = assignment.find(j);
    if (it == assignment.end()) fail(ErrorKind::InvalidArgument, "assignment lacks variable " + std::to_string(j));
    if (it->second < 1 || it->second > horizon + 1)
      fail(ErrorKind::InvalidArgument, "change time of variable " + std::to_string(j) + " out of range");
  }
  for (VarId j : node.owned_priors) total += log_prior_mass(model.variable(j).prior, assignment.at(j), horizon);
  for (long t = 1; t <= horizon; ++t) {
    VarSet active;
    for (VarId j : node.domain)
      if (assignment.at(j) <= t) active.push_back(j);
    total += model.registry.active_set_log_density(id, active, history[static_cast<size_t>(t - 1)]);
  }
  return total;
}

}  // namespace seqdmg
