#include <doctest.h>

#include "eval.hpp"
#include "helpers.hpp"

using namespace seqdmg;

namespace {

StreamSet streams_from(const testutil::History& h) {
  StreamSet out;
  for (const auto& [id, xs] : h) out[id] = DsfStream{id, static_cast<int>(xs.front().size()), xs};
  return out;
}

}  // namespace

TEST_CASE("distributed session equals the centralized sweep at every step") {
  const DamageModel m = testutil::load_fixture("chain4.json");
  const long steps = 6;
  const auto h = testutil::random_history(m, steps, 31);
  for (std::optional<int> window : {std::optional<int>{}, std::optional<int>{3}}) {
    Session session(m, {parse_rule("min:1,2", 1e-12)}, window);
    std::map<SensorId, LocalKernel> central;
    for (const auto& s : m.sensors) central.emplace(s.id, LocalKernel(m, s.id, window));
    for (long t = 0; t < steps; ++t) {
      std::map<SensorId, Eigen::VectorXd> x;
      for (const auto& s : m.sensors) {
        x[s.id] = h.at(s.id)[static_cast<size_t>(t)];
        central.at(s.id).step(x[s.id]);
      }
      session.step(x);
      const auto sweep = full_sweep(m, testutil::kernel_tables(central), t + 1);
      for (const auto& s : m.sensors) {
        const auto dist = session.belief(s.id);
        const auto& cent = sweep.beliefs.at(s.id);
        REQUIRE(dist.log_prob.size() == cent.log_prob.size());
        double worst = 0.0;
        for (size_t k = 0; k < cent.log_prob.size(); ++k)
          worst = std::max(worst, std::abs(dist.probability(k) - cent.probability(k)));
        CHECK(worst <= 1e-10);
      }
      CHECK(session.log().steps.back().messages == sweep.message_count);
      CHECK(session.log().steps.back().entries == sweep.entries);
    }
  }
}

TEST_CASE("no sensor reads another sensor's feature buffer") {
  const DamageModel m = testutil::load_fixture("asce.json");
  reset_isolation_violations();
  const auto h = testutil::random_history(m, 8, 3);
  const SessionLog log = run_session(m, streams_from(h), {parse_rule("min:1,3", 1e-12)}, 4);
  CHECK(log.steps.size() == 8);
  CHECK(isolation_violations() == 0);

  DsfBuffer buf(6);
  buf.append(Eigen::VectorXd::Zero(2));
  buf.latest(6);
  CHECK(isolation_violations() == 0);
  buf.latest(2);
  CHECK(isolation_violations() == 1);
  reset_isolation_violations();
}

TEST_CASE("message traffic matches the table sizes") {
  const DamageModel m = testutil::load_fixture("chain4.json");
  const auto h = testutil::random_history(m, 4, 8);
  const SessionLog log = run_session(m, streams_from(h), {parse_rule("single:4", 1e-12)});
  REQUIRE(log.steps.size() == 4);
  for (const auto& step : log.steps) {
    CHECK(step.messages == 6);  // 3 edges, both directions
    const size_t bins = static_cast<size_t>(step.n + 1);
    // Scopes: 1-2 {1,2}, 2-3 {3}, 3-4 {4}.
    CHECK(step.entries == 2 * (bins * bins + bins + bins));
  }
  const TrafficSummary t = measure_traffic(log);
  size_t entries = 0;
  for (const auto& step : log.steps) entries += step.entries;
  CHECK(t.entries == entries);
  CHECK(t.bytes == 8 * entries);
  CHECK(t.messages == 24);
  CHECK(t.entries_per_edge.at({1, 2}) == t.entries_per_edge.at({2, 1}));
  size_t sent = 0, received = 0;
  for (const auto& [s, b] : t.bytes_sent) sent += b;
  for (const auto& [s, b] : t.bytes_received) received += b;
  CHECK(sent == t.bytes);
  CHECK(received == t.bytes);
}

TEST_CASE("window bounds table sizes") {
  const DamageModel m = testutil::load_fixture("asce.json");
  const auto h = testutil::random_history(m, 12, 2);
  Session s(m, {parse_rule("max:1,3", 1e-12)}, 3);
  for (long t = 0; t < 12; ++t) {
    std::map<SensorId, Eigen::VectorXd> x;
    for (const auto& sn : m.sensors) x[sn.id] = h.at(sn.id)[static_cast<size_t>(t)];
    s.step(x);
    for (const auto& sn : m.sensors) CHECK(s.node(sn.id).kernel().table().bins() <= 4);
  }
  CHECK(s.node(6).kernel().merged());
}

TEST_CASE("session stops, records tau once and rejects bad input") {
  const DamageModel m = testutil::load_fixture("shake_table.json");
  ScenarioSpec sc;
  sc.planted = {{1, 5}};
  sc.length = 12;
  const StreamSet streams = generate_streams(m, sc, 0);
  const SessionLog log = run_session(m, streams, parse_rules("min:1;single:1;max:1,2", 1e-8));
  REQUIRE(log.verdicts.size() == 3);
  CHECK(log.verdicts[0].stopped);
  CHECK(*log.verdicts[0].tau >= 5);
  CHECK(log.verdicts[0].posterior_at_stop >= 1 - 1e-8);
  CHECK(log.verdicts[0].evaluated_at == 1);
  CHECK(log.verdicts[2].evaluated_at == 2);
  CHECK_FALSE(log.verdicts[2].stopped);  // variable 2 never changes
  CHECK(log.steps.size() == 12);

  Session s(m, parse_rules("min:1", 0.1));
  CHECK_THROWS_AS(s.step({{1, testutil::vec1(0.0)}}), Error);
  CHECK_THROWS_AS(s.step({{1, testutil::vec1(0.0)}, {2, testutil::vec1(0.0)}, {3, Eigen::VectorXd::Zero(2)}}), Error);
  CHECK_THROWS_AS(Session(m, parse_rules("min:4", 0.1)), Error);

  StreamSet bad = streams;
  bad[2].features.pop_back();
  CHECK_THROWS_AS(run_session(m, bad, parse_rules("min:1", 0.1)), Error);
}

TEST_CASE("LOCAL baseline runs one sensor alone") {
  const DamageModel m = testutil::load_fixture("shake_table.json");
  ScenarioSpec sc;
  sc.planted = {{1, 5}};
  sc.length = 20;
  const StreamSet streams = generate_streams(m, sc, 3);
  const SessionLog local = run_local_baseline(m, 1, streams, parse_rules("min:1", 1e-8));
  CHECK(local.method == "LOCAL");
  for (const auto& step : local.steps) CHECK(step.messages == 0);
  CHECK_THROWS_AS(run_local_baseline(m, 1, streams, parse_rules("min:1,2", 1e-8)), Error);

  // Running the single-sensor submodel through a session gives the same verdicts.
  const SessionLog direct = run_session(local_submodel(m, 1), {{1, streams.at(1)}}, parse_rules("min:1", 1e-8));
  CHECK(direct.verdicts[0].tau == local.verdicts[0].tau);
}
