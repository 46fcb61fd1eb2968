#pragma once

// Shared test utilities: fixture loading, small model builders and the
// brute-force joint posterior used as an independent oracle.

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "io.hpp"

namespace testutil {

using namespace seqdmg;

inline std::string fixture(const std::string& name) { return std::string(SEQDMG_FIXTURE_DIR) + "/" + name; }

inline DamageModel load_fixture(const std::string& name) { return model_from_json(read_json_file(fixture(name))); }

inline GaussianModel gauss1(double mean, double var) {
  return GaussianModel(Eigen::VectorXd::Constant(1, mean), Eigen::MatrixXd::Constant(1, 1, var));
}

inline Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

/// Plain normal log density written out by hand (1-D).
inline double normal_logpdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (x - mean) * (x - mean) / var;
}

/// Per-sensor feature history, history[id][t-1] = x_id[t].
using History = std::map<SensorId, std::vector<Eigen::VectorXd>>;

inline History random_history(const DamageModel& model, long steps, std::uint64_t seed, double scale = 1.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  History h;
  for (const auto& s : model.sensors)
    for (long t = 0; t < steps; ++t) {
      Eigen::VectorXd x(s.dim);
      for (int k = 0; k < s.dim; ++k) x(k) = normal(rng);
      h[s.id].push_back(x);
    }
  return h;
}

/// Log of the unnormalized joint p(lambda_1..lambda_d, x^N) with every
/// lambda_j in 1..N+1 (N+1 = "not yet"), from the factorization
/// prod_j prior_j(lambda_j) * prod_i prod_t density_i(active set at t)(x_i[t]).
inline double brute_log_joint(const DamageModel& model, const std::map<VarId, long>& lambda, const History& h,
                              long horizon) {
  double total = 0.0;
  for (const auto& v : model.variables) {
    const long n = lambda.at(v.id);
    const double rho = v.prior.rho();
    total += n <= horizon ? std::log(rho) + static_cast<double>(n - 1) * std::log(1.0 - rho)
                          : static_cast<double>(horizon) * std::log(1.0 - rho);
  }
  for (const auto& s : model.sensors)
    for (long t = 1; t <= horizon; ++t) {
      VarSet active;
      for (VarId j : s.domain)
        if (lambda.at(j) <= t) active.push_back(j);
      total += model.registry.model_for(s.id, active).log_density(h.at(s.id)[static_cast<size_t>(t - 1)]);
    }
  return total;
}

/// Exact marginal over one sensor's domain by enumerating all (N+1)^d joint
/// assignments. Result is in probability space, indexed like a LogTable over
/// the sensor's domain with bins N+1 (bin b <-> change time b+1).
inline std::vector<double> brute_marginal(const DamageModel& model, SensorId sensor, const History& h, long horizon) {
  const VarSet all = model.variable_ids();
  const VarSet& dom = model.sensor(sensor).domain;
  const size_t bins = static_cast<size_t>(horizon + 1);
  size_t joint = 1;
  for (size_t k = 0; k < all.size(); ++k) joint *= bins;
  size_t local = 1;
  for (size_t k = 0; k < dom.size(); ++k) local *= bins;

  std::vector<double> logs(joint);
  std::vector<size_t> local_index(joint);
  for (size_t flat = 0; flat < joint; ++flat) {
    std::map<VarId, long> lambda;
    size_t rest = flat;
    for (size_t k = all.size(); k-- > 0;) {
      lambda[all[k]] = static_cast<long>(rest % bins) + 1;
      rest /= bins;
    }
    logs[flat] = brute_log_joint(model, lambda, h, horizon);
    size_t li = 0;
    for (VarId j : dom) li = li * bins + static_cast<size_t>(lambda[j] - 1);
    local_index[flat] = li;
  }
  const double m = log_sum_exp(logs);
  std::vector<double> out(local, 0.0);
  for (size_t flat = 0; flat < joint; ++flat) out[local_index[flat]] += std::exp(logs[flat] - m);
  return out;
}

/// Small 1-D model over a chain of sensors built in code.
/// domains[i] is the domain of sensor i+1; edges chain consecutive sensors.
inline DamageModel chain_model(const std::vector<VarSet>& domains, const std::vector<double>& rho,
                               std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mean(-1.5, 1.5), var(0.5, 1.8);
  DamageModel m;
  for (size_t j = 0; j < rho.size(); ++j) m.variables.push_back({static_cast<int>(j + 1), GeometricPrior(rho[j])});
  for (size_t i = 0; i < domains.size(); ++i) {
    SensorNode s;
    s.id = static_cast<int>(i + 1);
    s.domain = domains[i];
    s.dim = 1;
    SensorDensities d;
    d.pre = gauss1(0.0, 1.0);
    for (const auto& sub : nonempty_subsets(s.domain)) d.post[sub] = gauss1(mean(rng), var(rng));
    m.registry.set_sensor(s.id, d);
    m.sensors.push_back(s);
    if (i > 0) m.tree.edges.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
  }
  m.tree.root = 1;
  return build_model(m);
}

/// Kernels of every sensor after feeding the whole history.
inline std::map<SensorId, LocalKernel> run_kernels(const DamageModel& model, const History& h,
                                                   std::optional<int> window = std::nullopt) {
  std::map<SensorId, LocalKernel> out;
  for (const auto& s : model.sensors) {
    auto it = out.emplace(s.id, LocalKernel(model, s.id, window)).first;
    for (const auto& x : h.at(s.id)) it->second.step(x);
  }
  return out;
}

inline std::map<SensorId, LogTable> kernel_tables(const std::map<SensorId, LocalKernel>& kernels) {
  std::map<SensorId, LogTable> out;
  for (const auto& [id, k] : kernels) out[id] = k.table();
  return out;
}

}  // namespace testutil
