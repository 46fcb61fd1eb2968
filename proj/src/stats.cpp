#include "stats.hpp"

#include <algorithm>
#include <numbers>

namespace seqdmg {

GaussianModel::GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  const auto m = mean_.size();
  if (m == 0) fail(ErrorKind::InvalidArgument, "Gaussian model needs dimension >= 1");
  if (cov_.rows() != m || cov_.cols() != m)
    fail(ErrorKind::InvalidArgument, "covariance shape does not match mean dimension " + std::to_string(m));
  if (!mean_.allFinite() || !cov_.allFinite()) fail(ErrorKind::Numeric, "non-finite Gaussian parameters");
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(ErrorKind::Numeric, "covariance is not symmetric");
  cov_ = 0.5 * (cov_ + cov_.transpose());
  llt_.compute(cov_);
  if (llt_.info() != Eigen::Success) fail(ErrorKind::Numeric, "covariance is not positive definite");
  const Eigen::VectorXd diag = llt_.matrixL().toDenseMatrix().diagonal();
  if ((diag.array() <= 0.0).any()) fail(ErrorKind::Numeric, "covariance is singular");
  log_det_ = 2.0 * diag.array().log().sum();
}

double GaussianModel::log_density(const Eigen::VectorXd& x) const {
  if (x.size() != mean_.size())
    fail(ErrorKind::Data, "feature dimension " + std::to_string(x.size()) + " does not match model dimension " +
                              std::to_string(mean_.size()));
  const Eigen::VectorXd z = llt_.matrixL().solve(x - mean_);
  return -0.5 * (static_cast<double>(mean_.size()) * std::log(2.0 * std::numbers::pi) + log_det_ + z.squaredNorm());
}

Eigen::VectorXd GaussianModel::solve(const Eigen::VectorXd& b) const { return llt_.solve(b); }

Eigen::MatrixXd GaussianModel::cholesky_lower() const { return llt_.matrixL(); }

GaussianModel fit_gaussian(const std::vector<Eigen::VectorXd>& samples, double ridge) {
  if (samples.empty()) fail(ErrorKind::Data, "cannot fit a Gaussian to zero samples");
  const auto m = samples.front().size();
  if (static_cast<Eigen::Index>(samples.size()) < m + 1)
    fail(ErrorKind::Data, "fitting a " + std::to_string(m) + "-D Gaussian needs at least " + std::to_string(m + 1) +
                              " samples, got " + std::to_string(samples.size()));
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  for (const auto& s : samples) {
    if (s.size() != m) fail(ErrorKind::Data, "inconsistent sample dimensions");
    mean += s;
  }
  mean /= static_cast<double>(samples.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
  for (const auto& s : samples) {
    const Eigen::VectorXd d = s - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(samples.size() - 1);
  if (ridge < 0.0) {
    ridge = 1e-6 * cov.trace() / static_cast<double>(m);
    if (!(ridge > 0.0)) ridge = 1e-12;
  }
  cov.diagonal().array() += ridge;
  return GaussianModel(std::move(mean), std::move(cov));
}

double kl_divergence(const GaussianModel& f, const GaussianModel& g) {
  if (f.dim() != g.dim()) fail(ErrorKind::InvalidArgument, "KL divergence between models of different dimension");
  const Eigen::VectorXd diff = g.mean() - f.mean();
  double trace = 0.0;
  const Eigen::MatrixXd ginv_f = g.cholesky_lower().triangularView<Eigen::Lower>().solve(f.cov());
  // tr(G^-1 F) = tr(L^-T L^-1 F)
  trace = g.cholesky_lower().transpose().triangularView<Eigen::Upper>().solve(ginv_f).trace();
  const double maha = diff.dot(g.solve(diff));
  const double kl = 0.5 * (trace + maha - static_cast<double>(f.dim()) + g.log_det() - f.log_det());
  return std::max(0.0, kl);
}

GeometricPrior::GeometricPrior(double rho) : rho_(rho) {
  if (!(rho > 0.0 && rho < 1.0)) fail(ErrorKind::InvalidArgument, "geometric prior needs 0 < rho < 1");
  log_rho_ = std::log(rho);
  log1m_rho_ = std::log1p(-rho);
}

double log_prior_mass(const GeometricPrior& prior, long n, long horizon) {
  if (horizon < 0 || n < 1 || n > horizon + 1)
    fail(ErrorKind::InvalidArgument, "change time " + std::to_string(n) + " outside 1.." + std::to_string(horizon + 1));
  if (n == horizon + 1) return static_cast<double>(horizon) * prior.log_one_minus_rho();
  return prior.log_rho() + static_cast<double>(n - 1) * prior.log_one_minus_rho();
}

double prior_mass(const GeometricPrior& prior, long n, long horizon) {
  return std::exp(log_prior_mass(prior, n, horizon));
}

void DistributionRegistry::set_sensor(SensorId id, SensorDensities densities) {
  sensors_[id] = std::move(densities);
}

const SensorDensities& DistributionRegistry::sensor(SensorId id) const {
  auto it = sensors_.find(id);
  if (it == sensors_.end()) fail(ErrorKind::Model, "no densities registered for sensor " + std::to_string(id));
  return it->second;
}

const GaussianModel& DistributionRegistry::model_for(SensorId id, const VarSet& active) const {
  const auto& s = sensor(id);
  if (active.empty()) return s.pre;
  auto it = s.post.find(active);
  if (it == s.post.end())
    fail(ErrorKind::Model, "model incomplete: sensor " + std::to_string(id) + ", subset " + format_set(active));
  return it->second;
}

double DistributionRegistry::active_set_log_density(SensorId id, const VarSet& active, const Eigen::VectorXd& x) const {
  return model_for(id, active).log_density(x);
}

std::vector<VarSet> DistributionRegistry::missing_subsets(SensorId id, const VarSet& domain) const {
  std::vector<VarSet> missing;
  auto it = sensors_.find(id);
  for (const auto& subset : nonempty_subsets(domain))
    if (it == sensors_.end() || it->second.post.count(subset) == 0) missing.push_back(subset);
  return missing;
}

std::vector<VarSet> nonempty_subsets(const VarSet& domain) {
  const size_t d = domain.size();
  std::vector<VarSet> out;
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    VarSet s;
    for (size_t k = 0; k < d; ++k)
      if (mask & (1u << k)) s.push_back(domain[k]);
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [](const VarSet& a, const VarSet& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

}  // namespace seqdmg
