#pragma once

// Damage variables, sensors with local domains, and the sensor tree over
// which messages flow.

#include <Eigen/Dense>

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "stats.hpp"

namespace seqdmg {

struct DamageVariable {
  VarId id = 0;
  GeometricPrior prior{0.5};
};

struct SensorNode {
  SensorId id = 0;
  VarSet domain;        // S_i, sorted
  VarSet owned_priors;  // prior factors absorbed by this sensor's kernel
  int dim = 1;
};

struct SensorTree {
  std::vector<std::pair<SensorId, SensorId>> edges;
  SensorId root = 0;
};

class DamageModel {
 public:
  std::vector<DamageVariable> variables;  // sorted by id
  std::vector<SensorNode> sensors;        // sorted by id
  SensorTree tree;
  DistributionRegistry registry;

  const SensorNode& sensor(SensorId id) const;
  const DamageVariable& variable(VarId id) const;
  bool has_sensor(SensorId id) const;
  std::vector<SensorId> sensor_ids() const;
  VarSet variable_ids() const;
  /// Tree neighbours, ascending.
  std::vector<SensorId> neighbors(SensorId id) const;
  /// Sensors whose domain contains `var` (Q_j), ascending.
  std::vector<SensorId> sensors_observing(VarId var) const;
};

struct Violation {
  std::string kind;  // cycle | disconnected | no-shared-variable | running-intersection | bad-edge | bad-root
  std::string message;
};

/// Structural checks over the sensor tree. Violations are returned, not thrown.
std::vector<Violation> validate_tree(const DamageModel& model);

/// Resolves ids and ownership and checks dimensions and registry completeness.
/// Sensors with an empty owned_priors list get the default: each variable is
/// owned by the lowest-id sensor containing it. Throws Model on any problem.
void cross_reference(DamageModel& model);

/// cross_reference + validate_tree; throws Model listing all tree violations.
DamageModel build_model(DamageModel draft);

/// Lowest-id sensor whose domain covers `targets`, or 0 if none.
SensorId covering_sensor(const DamageModel& model, const VarSet& targets);

/// Single-sensor model holding sensor `id` with every variable of its domain
/// and all of their priors. Used for the LOCAL baseline.
DamageModel local_submodel(const DamageModel& model, SensorId id);

/// The same model with a different designated root.
DamageModel with_root(const DamageModel& model, SensorId root);

/// Direct evaluation of a sensor's log local kernel for one change-time
/// assignment (every n_j in 1..N+1, N = history.size()): owned log priors plus
/// the log likelihood of the history under the active sets it induces.
double local_kernel(const DamageModel& model, SensorId id, const std::map<VarId, long>& assignment,
                    const std::vector<Eigen::VectorXd>& history);

}  // namespace seqdmg
