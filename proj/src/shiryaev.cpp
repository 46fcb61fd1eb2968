#include "shiryaev.hpp"

namespace seqdmg {

SingleVarProblem::SingleVarProblem(GeometricPrior p, std::vector<GaussianModel> g, std::vector<GaussianModel> f)
    : prior(p), pre(std::move(g)), post(std::move(f)) {
  if (pre.empty()) fail(ErrorKind::InvalidArgument, "single-variable problem needs at least one sensor");
  if (pre.size() != post.size()) fail(ErrorKind::InvalidArgument, "pre/post model counts differ");
  for (size_t i = 0; i < pre.size(); ++i)
    if (pre[i].dim() != post[i].dim())
      fail(ErrorKind::InvalidArgument, "pre/post dimension mismatch at sensor index " + std::to_string(i));
}

PosteriorState::PosteriorState(std::optional<int> window) : window_(window) {
  if (window && *window < 1) fail(ErrorKind::InvalidArgument, "window must be at least 1");
}

double PosteriorState::prob_changed() const {
  double p = 0.0;
  for (size_t b = 0; b + 1 < log_post_.size(); ++b) p += std::exp(log_post_[b]);
  return std::min(1.0, p);
}

PosteriorState update_posterior(const SingleVarProblem& problem, const PosteriorState& state,
                                const std::vector<Eigen::VectorXd>& features) {
  if (features.size() != problem.sensors())
    fail(ErrorKind::Data, "expected features for " + std::to_string(problem.sensors()) + " sensors, got " +
                              std::to_string(features.size()));
  double log_f = 0.0, log_g = 0.0;
  for (size_t i = 0; i < features.size(); ++i) {
    if (!features[i].allFinite()) fail(ErrorKind::Data, "non-finite feature at sensor index " + std::to_string(i));
    log_f += problem.post[i].log_density(features[i]);
    log_g += problem.pre[i].log_density(features[i]);
  }

  PosteriorState next = state;
  next.horizon_ = state.horizon_ + 1;
  auto& w = next.log_post_;
  const double not_yet = w.back();
  w.pop_back();
  for (double& v : w) v += log_f;
  w.push_back(not_yet + problem.prior.log_rho() + log_f);
  w.push_back(not_yet + problem.prior.log_one_minus_rho() + log_g);

  if (next.window_ && w.size() > static_cast<size_t>(*next.window_) + 1) {
    w[1] = log_add(w[0], w[1]);
    w.erase(w.begin());
    next.merged_ = true;
  }

  const double z = log_sum_exp(w);
  if (z == kNegInf || !std::isfinite(z)) fail(ErrorKind::Numeric, "posterior has no finite mass");
  for (double& v : w) v -= z;
  return next;
}

Verdict stopping_decision(double posterior_changed, double alpha_fa) {
  return posterior_changed >= 1.0 - alpha_fa ? Verdict::Declare : Verdict::Continue;
}

double delay_bound_single(double rho, const std::vector<double>& kl, double alpha_fa) {
  if (!(rho > 0.0 && rho < 1.0)) fail(ErrorKind::InvalidArgument, "rho must lie in (0,1)");
  if (!(alpha_fa > 0.0 && alpha_fa < 1.0)) fail(ErrorKind::InvalidArgument, "alpha must lie in (0,1)");
  double total = 0.0;
  bool any_positive = false;
  for (double v : kl) {
    if (!(v >= 0.0)) fail(ErrorKind::InvalidArgument, "KL distances must be nonnegative");
    total += v;
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) fail(ErrorKind::InvalidArgument, "at least one KL distance must be positive");
  return std::abs(std::log(alpha_fa)) / (-std::log1p(-rho) + total);
}

}  // namespace seqdmg
