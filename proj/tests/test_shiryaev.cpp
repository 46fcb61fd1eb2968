#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "shiryaev.hpp"
#include "simnet.hpp"

using namespace seqdmg;
using testutil::gauss1;
using testutil::vec1;

namespace {

// P(lambda = k | x^N), k = 1..N+1, from the closed form
// pi(k) prod_{t<k} g(x_t) prod_{t>=k} f(x_t) with two sensors.
std::vector<double> direct_posterior(double rho, const std::vector<std::array<double, 2>>& x) {
  const long n = static_cast<long>(x.size());
  auto lg = [&](long t) {
    return testutil::normal_logpdf(x[t][0], 0.0, 1.0) + testutil::normal_logpdf(x[t][1], 0.0, 2.0);
  };
  auto lf = [&](long t) {
    return testutil::normal_logpdf(x[t][0], 1.0, 1.0) + testutil::normal_logpdf(x[t][1], -0.5, 1.0);
  };
  std::vector<double> logs;
  for (long k = 1; k <= n + 1; ++k) {
    double v = k <= n ? std::log(rho) + (k - 1) * std::log(1 - rho) : n * std::log(1 - rho);
    for (long t = 0; t < n; ++t) v += t + 1 < k ? lg(t) : lf(t);
    logs.push_back(v);
  }
  const double z = log_sum_exp(logs);
  for (double& v : logs) v = std::exp(v - z);
  return logs;
}

SingleVarProblem two_sensor_problem(double rho) {
  return SingleVarProblem(GeometricPrior(rho), {gauss1(0.0, 1.0), gauss1(0.0, 2.0)},
                          {gauss1(1.0, 1.0), gauss1(-0.5, 1.0)});
}

std::vector<std::array<double, 2>> draws(int n, int change_at, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<std::array<double, 2>> x;
  for (int t = 1; t <= n; ++t) {
    if (t < change_at) x.push_back({z(rng), std::sqrt(2.0) * z(rng)});
    else x.push_back({1.0 + z(rng), -0.5 + z(rng)});
  }
  return x;
}

}  // namespace

TEST_CASE("incremental posterior equals the closed-form posterior") {
  const auto x = draws(15, 8, 3);
  const auto problem = two_sensor_problem(0.1);
  PosteriorState s;
  for (size_t t = 0; t < x.size(); ++t) {
    s = update_posterior(problem, s, {vec1(x[t][0]), vec1(x[t][1])});
    const auto direct = direct_posterior(0.1, std::vector<std::array<double, 2>>(x.begin(), x.begin() + t + 1));
    REQUIRE(s.bins() == direct.size());
    double total = 0.0;
    for (size_t b = 0; b < s.bins(); ++b) {
      CHECK(s.probability(b) == doctest::Approx(direct[b]).epsilon(1e-10));
      total += s.probability(b);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.ccdf() == doctest::Approx(direct.back()).epsilon(1e-10));
  }
  CHECK(s.horizon() == 15);
}

TEST_CASE("window caps bins and is exact for a single variable") {
  const auto x = draws(30, 12, 8);
  const auto problem = two_sensor_problem(0.05);
  PosteriorState full, windowed(5);
  for (const auto& xt : x) {
    full = update_posterior(problem, full, {vec1(xt[0]), vec1(xt[1])});
    windowed = update_posterior(problem, windowed, {vec1(xt[0]), vec1(xt[1])});
    CHECK(windowed.bins() <= 6);
    CHECK(windowed.prob_changed() == doctest::Approx(full.prob_changed()).epsilon(1e-12));
    // The unmerged bins match their exact counterparts.
    const size_t offset = full.bins() - windowed.bins();
    for (size_t b = 1; b < windowed.bins(); ++b)
      CHECK(windowed.probability(b) == doctest::Approx(full.probability(b + offset)).epsilon(1e-10));
  }
  CHECK(windowed.first_bin_merged());
  CHECK_FALSE(full.first_bin_merged());
  CHECK_THROWS_AS(PosteriorState(0), Error);
}

TEST_CASE("stopping threshold is inclusive") {
  CHECK(stopping_decision(0.99, 0.01) == Verdict::Declare);
  CHECK(stopping_decision(0.9899, 0.01) == Verdict::Continue);
  CHECK(stopping_decision(1.0, 1e-10) == Verdict::Declare);
}

TEST_CASE("posterior after a strong change crosses a loose threshold first") {
  const auto x = draws(80, 20, 4);
  const auto problem = two_sensor_problem(0.05);
  PosteriorState s;
  long tau_loose = 0, tau_strict = 0;
  for (const auto& xt : x) {
    s = update_posterior(problem, s, {vec1(xt[0]), vec1(xt[1])});
    if (!tau_loose && stopping_decision(s, 0.5) == Verdict::Declare) tau_loose = s.horizon();
    if (!tau_strict && stopping_decision(s, 1e-6) == Verdict::Declare) tau_strict = s.horizon();
  }
  REQUIRE(tau_strict > 0);
  CHECK(tau_loose <= tau_strict);
}

TEST_CASE("bad inputs") {
  const auto problem = two_sensor_problem(0.05);
  PosteriorState s;
  CHECK_THROWS_AS(update_posterior(problem, s, {vec1(0.0)}), Error);
  CHECK_THROWS_AS(update_posterior(problem, s, {vec1(std::nan("")), vec1(0.0)}), Error);
  CHECK_THROWS_AS(SingleVarProblem(GeometricPrior(0.1), {gauss1(0, 1)}, {}), Error);
}

TEST_CASE("delay bound arithmetic") {
  // |ln alpha| / (-ln(1-rho) + sum KL), natural log.
  const double d = -std::log(0.999);
  CHECK(delay_bound_single(0.001, {4.44, 6.06, 6.27}, 1e-8) ==
        doctest::Approx(std::log(1e8) / (d + 16.77)).epsilon(1e-12));
  CHECK(delay_bound_single(0.001, {4.44, 6.06, 6.27}, 1e-8) == doctest::Approx(1.0984).epsilon(1e-4));
  CHECK(delay_bound_single(0.001, {6.27}, 1e-8) == doctest::Approx(2.9374).epsilon(1e-4));
  // 0.96 and 2.57 correspond to alpha = 1e-7.
  CHECK(delay_bound_single(0.001, {4.44, 6.06, 6.27}, 1e-7) == doctest::Approx(0.96).epsilon(0.005));
  CHECK(delay_bound_single(0.001, {6.27}, 1e-7) == doctest::Approx(2.57).epsilon(0.002));
  CHECK_THROWS_AS(delay_bound_single(0.001, {0.0}, 1e-8), Error);
  CHECK_THROWS_AS(delay_bound_single(0.0, {1.0}, 1e-8), Error);
  CHECK_THROWS_AS(delay_bound_single(0.01, {1.0}, 1.0), Error);
}

TEST_CASE("single-variable posterior agrees with message passing on a one-variable network") {
  // Two sensors sharing variable 1 over one edge.
  DamageModel m;
  m.variables.push_back({1, GeometricPrior(0.1)});
  for (int id : {1, 2}) {
    SensorDensities d;
    d.pre = id == 1 ? gauss1(0.0, 1.0) : gauss1(0.0, 2.0);
    d.post[{1}] = id == 1 ? gauss1(1.0, 1.0) : gauss1(-0.5, 1.0);
    m.registry.set_sensor(id, d);
    m.sensors.push_back({id, {1}, {}, 1});
  }
  m.tree.edges = {{1, 2}};
  m = build_model(m);

  const auto x = draws(12, 6, 17);
  const auto problem = two_sensor_problem(0.1);
  PosteriorState s;
  Session session(m, {parse_rule("single:1", 1e-3)});
  for (const auto& xt : x) {
    s = update_posterior(problem, s, {vec1(xt[0]), vec1(xt[1])});
    session.step({{1, vec1(xt[0])}, {2, vec1(xt[1])}});
    for (SensorId id : {1, 2}) {
      const auto belief = session.belief(id);
      for (size_t b = 0; b < s.bins(); ++b) CHECK(belief.probability(b) == doctest::Approx(s.probability(b)).epsilon(1e-10));
    }
    CHECK(session.log().steps.back().posterior[0] == doctest::Approx(s.prob_changed()).epsilon(1e-10));
  }
}
