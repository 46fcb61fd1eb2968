#pragma once

// Gaussian feature models, geometric change-time priors and the per-sensor
// registry of pre-change and post-change densities.

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <vector>

#include "common.hpp"

namespace seqdmg {

/// Multivariate normal with a cached Cholesky factor. Immutable once built.
class GaussianModel {
 public:
  GaussianModel() = default;
  /// Throws Numeric if `cov` is not symmetric (1e-12 relative) or not positive definite.
  GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  double log_det() const { return log_det_; }

  double log_density(const Eigen::VectorXd& x) const;
  /// Solves cov * y = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  /// Lower Cholesky factor L with L L^T = cov.
  Eigen::MatrixXd cholesky_lower() const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
};

/// Sample mean and covariance plus ridge * I. A negative ridge selects the
/// default 1e-6 * trace(cov) / m; a zero trace then falls back to 1e-12.
GaussianModel fit_gaussian(const std::vector<Eigen::VectorXd>& samples, double ridge = -1.0);

inline double log_density(const GaussianModel& model, const Eigen::VectorXd& x) { return model.log_density(x); }

/// D_KL(f || g) for Gaussians, natural log.
double kl_divergence(const GaussianModel& f, const GaussianModel& g);

class GeometricPrior {
 public:
  explicit GeometricPrior(double rho);
  double rho() const { return rho_; }
  double log_rho() const { return log_rho_; }
  double log_one_minus_rho() const { return log1m_rho_; }

 private:
  double rho_;
  double log_rho_;
  double log1m_rho_;
};

/// P(lambda = n) for n <= horizon, and the survival mass (1-rho)^horizon at
/// n = horizon + 1 ("not yet").
double prior_mass(const GeometricPrior& prior, long n, long horizon);
double log_prior_mass(const GeometricPrior& prior, long n, long horizon);

/// Pre-change model g and post-change models f^A keyed by the set A of
/// triggered damage variables, for one sensor.
struct SensorDensities {
  GaussianModel pre;
  std::map<VarSet, GaussianModel> post;
};

class DistributionRegistry {
 public:
  void set_sensor(SensorId id, SensorDensities densities);
  bool has_sensor(SensorId id) const { return sensors_.count(id) != 0; }
  const SensorDensities& sensor(SensorId id) const;

  /// Model for the currently active set; empty set means pre-change.
  /// Throws Model naming the sensor and subset when the entry is missing.
  const GaussianModel& model_for(SensorId id, const VarSet& active) const;
  double active_set_log_density(SensorId id, const VarSet& active, const Eigen::VectorXd& x) const;

  /// Subsets of `domain` lacking a post-change entry, in lexicographic order.
  std::vector<VarSet> missing_subsets(SensorId id, const VarSet& domain) const;

  const std::map<SensorId, SensorDensities>& sensors() const { return sensors_; }

 private:
  std::map<SensorId, SensorDensities> sensors_;
};

/// All nonempty subsets of `domain`, ordered by size then lexicographically.
std::vector<VarSet> nonempty_subsets(const VarSet& domain);

}  // namespace seqdmg
