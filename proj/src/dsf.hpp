#pragma once

// Damage-sensitive feature (DSF) extraction: per-chunk standardization followed
// by a least-squares autoregressive fit; selected AR coefficients form the
// feature vector of each chunk.

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "common.hpp"

namespace seqdmg {

struct RawSignal {
  SensorId sensor_id = 1;
  std::vector<double> samples;
  double sample_rate_hz = 1.0;
};

struct Chunk {
  SensorId sensor_id = 1;
  int index = 1;  // 1-based
  std::vector<double> values;
};

struct ArFit {
  int order = 0;
  std::vector<double> coefficients;  // theta_1..theta_p
  double residual_variance = 0.0;
  double aic = 0.0;
};

struct DsfStream {
  SensorId sensor_id = 1;
  int dim = 0;
  std::vector<Eigen::VectorXd> features;  // features[n-1] is x[n]

  size_t length() const { return features.size(); }
};

/// Splits the signal into floor(len / chunk_size) chunks and standardizes each
/// by its own mean and sample standard deviation. The trailing partial chunk is
/// dropped. A constant chunk raises a Data error naming its index.
std::vector<Chunk> chunk_and_normalize(const RawSignal& signal, size_t chunk_size);

/// Conditional least-squares AR(p) fit of a[t] on a[t-1..t-p].
/// Requires more than 10*p samples; throws Numeric when the normal equations
/// have a condition estimate above 1e12.
ArFit fit_ar(std::span<const double> values, int order);
inline ArFit fit_ar(const Chunk& chunk, int order) { return fit_ar(chunk.values, order); }

/// argmin_p AIC over 1..max_order; ties go to the smaller order.
int select_order_aic(std::span<const double> values, int max_order);
inline int select_order_aic(const Chunk& chunk, int max_order) { return select_order_aic(chunk.values, max_order); }

/// Order used for a whole signal when the order is chosen by AIC: the most
/// frequent per-chunk AIC choice (ties to the smaller order), raised to at
/// least `min_order` so requested coefficient indices exist.
int select_signal_order_aic(const std::vector<Chunk>& chunks, int max_order, int min_order);

/// One feature vector per chunk made of the AR coefficients listed in
/// `coeff_indices` (1-based, any order, duplicates rejected); output order is
/// ascending index.
DsfStream extract_dsf_stream(const RawSignal& signal, size_t chunk_size, int order,
                             std::vector<int> coeff_indices);

}  // namespace seqdmg
