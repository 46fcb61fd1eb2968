#pragma once

// Shiryaev posterior for a single damage variable observed by several
// conditionally independent sensors.

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "stats.hpp"

namespace seqdmg {

struct SingleVarProblem {
  GeometricPrior prior{0.5};
  std::vector<GaussianModel> pre;   // g_i
  std::vector<GaussianModel> post;  // f_i

  SingleVarProblem(GeometricPrior p, std::vector<GaussianModel> g, std::vector<GaussianModel> f);
  size_t sensors() const { return pre.size(); }
};

/// Posterior over the change time after N observations. Bins are the change
/// times 1..N plus the trailing "not yet" bin (N+1). With a window W, once the
/// bin count exceeds W+1 the oldest two bins are merged, so bin 0 may
/// aggregate every change time up to N-W+1.
class PosteriorState {
 public:
  explicit PosteriorState(std::optional<int> window = std::nullopt);

  long horizon() const { return horizon_; }
  std::optional<int> window() const { return window_; }
  size_t bins() const { return log_post_.size(); }
  /// True when bin 0 aggregates several change times.
  bool first_bin_merged() const { return merged_; }

  /// Normalized log posterior per bin.
  const std::vector<double>& log_posterior() const { return log_post_; }
  double probability(size_t bin) const { return std::exp(log_post_[bin]); }
  /// P(lambda <= N | x^N).
  double prob_changed() const;
  /// 1 - P(lambda <= N | x^N), computed from the "not yet" bin directly.
  double ccdf() const { return std::exp(log_post_.back()); }

 private:
  friend PosteriorState update_posterior(const SingleVarProblem&, const PosteriorState&,
                                         const std::vector<Eigen::VectorXd>&);
  long horizon_ = 0;
  std::optional<int> window_;
  bool merged_ = false;
  std::vector<double> log_post_{0.0};
};

/// One incremental step: every existing change hypothesis accrues
/// sum_i log f_i(x_i[N]); the "not yet" hypothesis splits into "changed at N"
/// and "not yet"; then the weights are renormalized.
PosteriorState update_posterior(const SingleVarProblem& problem, const PosteriorState& state,
                                const std::vector<Eigen::VectorXd>& features);

enum class Verdict { Continue, Declare };

/// Declare iff P(lambda <= N) >= 1 - alpha (inclusive).
Verdict stopping_decision(double posterior_changed, double alpha_fa);
inline Verdict stopping_decision(const PosteriorState& state, double alpha_fa) {
  return stopping_decision(state.prob_changed(), alpha_fa);
}

/// Asymptotic delay |ln alpha| / (-ln(1-rho) + sum KL).
double delay_bound_single(double rho, const std::vector<double>& kl, double alpha_fa);

}  // namespace seqdmg
