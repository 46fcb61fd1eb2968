#include "dsf.hpp"

#include <algorithm>
#include <map>

namespace seqdmg {

std::vector<Chunk> chunk_and_normalize(const RawSignal& signal, size_t chunk_size) {
  if (chunk_size < 2) fail(ErrorKind::InvalidArgument, "chunk size must be at least 2");
  if (!(signal.sample_rate_hz > 0.0)) fail(ErrorKind::InvalidArgument, "sample rate must be positive");
  if (signal.samples.size() < chunk_size)
    fail(ErrorKind::Data, "signal of sensor " + std::to_string(signal.sensor_id) + " has " +
                              std::to_string(signal.samples.size()) + " samples, fewer than chunk size " +
                              std::to_string(chunk_size));

  const size_t count = signal.samples.size() / chunk_size;
  std::vector<Chunk> chunks;
  chunks.reserve(count);
  for (size_t c = 0; c < count; ++c) {
    auto first = signal.samples.begin() + static_cast<std::ptrdiff_t>(c * chunk_size);
    Chunk chunk{signal.sensor_id, static_cast<int>(c + 1), std::vector<double>(first, first + chunk_size)};

    double mean = 0.0;
    for (double v : chunk.values) {
      if (!std::isfinite(v))
        fail(ErrorKind::Data, "non-finite sample in chunk " + std::to_string(chunk.index) + " of sensor " +
                                  std::to_string(signal.sensor_id));
      mean += v;
    }
    mean /= static_cast<double>(chunk_size);
    double ss = 0.0;
    for (double v : chunk.values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(chunk_size - 1));
    if (!(sd > 0.0))
      fail(ErrorKind::Data, "degenerate chunk " + std::to_string(chunk.index) + " of sensor " +
                                std::to_string(signal.sensor_id) + ": zero variance");
    for (double& v : chunk.values) v = (v - mean) / sd;
    chunks.push_back(std::move(chunk));
  }
  return chunks;
}

ArFit fit_ar(std::span<const double> values, int order) {
  if (order < 1) fail(ErrorKind::InvalidArgument, "AR order must be positive");
  const auto n = static_cast<Eigen::Index>(values.size());
  if (n <= 10 * static_cast<Eigen::Index>(order))
    fail(ErrorKind::InvalidArgument, "AR(" + std::to_string(order) + ") fit needs more than " +
                                         std::to_string(10 * order) + " samples, got " + std::to_string(n));

  const Eigen::Index p = order;
  const Eigen::Index rows = n - p;
  Eigen::MatrixXd lags(rows, p);
  Eigen::VectorXd target(rows);
  for (Eigen::Index t = p; t < n; ++t) {
    target(t - p) = values[static_cast<size_t>(t)];
    for (Eigen::Index k = 1; k <= p; ++k) lags(t - p, k - 1) = values[static_cast<size_t>(t - k)];
  }

  const Eigen::MatrixXd normal = lags.transpose() * lags;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    fail(ErrorKind::Numeric, "ill-conditioned AR(" + std::to_string(order) + ") normal equations");

  const Eigen::VectorXd theta = normal.ldlt().solve(lags.transpose() * target);
  const double rss = (target - lags * theta).squaredNorm();

  ArFit fit;
  fit.order = order;
  fit.coefficients.assign(theta.data(), theta.data() + theta.size());
  fit.residual_variance = std::max(0.0, rss / static_cast<double>(rows));
  fit.aic = static_cast<double>(rows) * std::log(fit.residual_variance) + 2.0 * order;
  return fit;
}

int select_order_aic(std::span<const double> values, int max_order) {
  if (max_order < 1) fail(ErrorKind::InvalidArgument, "max order must be at least 1");
  int best = 1;
  double best_aic = fit_ar(values, 1).aic;
  for (int p = 2; p <= max_order; ++p) {
    const double aic = fit_ar(values, p).aic;
    if (aic < best_aic) {
      best_aic = aic;
      best = p;
    }
  }
  return best;
}

int select_signal_order_aic(const std::vector<Chunk>& chunks, int max_order, int min_order) {
  if (chunks.empty()) fail(ErrorKind::Data, "no chunks to select an AR order from");
  std::map<int, int> votes;
  for (const auto& c : chunks) ++votes[select_order_aic(c, max_order)];
  int best = 1, best_votes = -1;
  for (const auto& [p, v] : votes)  // ascending p, so ties keep the smaller order
    if (v > best_votes) {
      best = p;
      best_votes = v;
    }
  return std::max(best, min_order);
}

DsfStream extract_dsf_stream(const RawSignal& signal, size_t chunk_size, int order, std::vector<int> coeff_indices) {
  if (coeff_indices.empty()) fail(ErrorKind::InvalidArgument, "at least one AR coefficient index is required");
  std::sort(coeff_indices.begin(), coeff_indices.end());
  if (std::adjacent_find(coeff_indices.begin(), coeff_indices.end()) != coeff_indices.end())
    fail(ErrorKind::InvalidArgument, "duplicate AR coefficient index");
  if (coeff_indices.front() < 1 || coeff_indices.back() > order)
    fail(ErrorKind::InvalidArgument, "AR coefficient indices must lie in 1.." + std::to_string(order));

  DsfStream stream;
  stream.sensor_id = signal.sensor_id;
  stream.dim = static_cast<int>(coeff_indices.size());
  for (const auto& chunk : chunk_and_normalize(signal, chunk_size)) {
    const ArFit fit = fit_ar(chunk, order);
    Eigen::VectorXd x(stream.dim);
    for (int k = 0; k < stream.dim; ++k) x(k) = fit.coefficients[static_cast<size_t>(coeff_indices[k] - 1)];
    stream.features.push_back(std::move(x));
  }
  return stream;
}

}  // namespace seqdmg
