#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "log_table.hpp"
#include "model.hpp"

namespace seqdmg {

/// Incrementally maintained log local kernel of one sensor over the joint
/// change-time bins of its local domain.
///
/// Bin layout per axis at horizon N with B bins: bins 0..B-2 are change times
/// N-B+2..N and bin B-1 is "not yet" (N+1). Each step splits the "not yet" bin
/// into "changed now" and "not yet", adds owned prior factors, and adds one
/// density evaluation per distinct active set. With a window W the oldest two
/// bins are merged whenever B exceeds W+1: log-sum-exp along axes whose prior
/// this kernel owns (exact for that factor) and max along the others.
class LocalKernel {
 public:
  LocalKernel(const DamageModel& model, SensorId id, std::optional<int> window = std::nullopt);

  SensorId sensor_id() const { return id_; }
  const VarSet& domain() const { return domain_; }
  long horizon() const { return horizon_; }
  const LogTable& table() const { return table_; }
  bool merged() const { return merged_; }

  /// Advances N by one with this sensor's feature vector x[N+1].
  void step(const Eigen::VectorXd& x);

 private:
  const DistributionRegistry* registry_;
  SensorId id_;
  VarSet domain_;
  std::vector<std::optional<GeometricPrior>> owned_;  // per axis
  std::optional<int> window_;
  long horizon_ = 0;
  bool merged_ = false;
  LogTable table_;
  std::vector<const GaussianModel*> by_mask_;  // density for each active-set bitmask
};

/// Change time represented by `bin` when a table has `bins` bins at `horizon`.
/// For a merged bin 0 this is the latest change time it aggregates.
inline long bin_change_time(size_t bin, size_t bins, long horizon) {
  return horizon - static_cast<long>(bins) + 2 + static_cast<long>(bin);
}

}  // namespace seqdmg
