#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "inference.hpp"
#include "kernel.hpp"

using namespace seqdmg;
using testutil::History;

namespace {

double max_abs_diff(const BeliefTable& belief, const std::vector<double>& exact) {
  double worst = 0.0;
  for (size_t k = 0; k < exact.size(); ++k) worst = std::max(worst, std::abs(belief.probability(k) - exact[k]));
  return worst;
}

SweepResult sweep(const DamageModel& model, const History& h, std::optional<int> window = std::nullopt) {
  const auto kernels = testutil::run_kernels(model, h, window);
  return full_sweep(model, testutil::kernel_tables(kernels), kernels.begin()->second.horizon());
}

DamageModel chain4_model() { return testutil::load_fixture("chain4.json"); }

}  // namespace

TEST_CASE("log table broadcast add and marginalization against loops") {
  LogTable t({1, 2, 4}, 3);
  for (size_t k = 0; k < t.size(); ++k) t[k] = 0.1 * static_cast<double>(k) - 1.0;
  LogTable m({2}, 3);
  for (size_t k = 0; k < 3; ++k) m[k] = static_cast<double>(k);
  LogTable sum = t;
  sum.add(m);
  for (size_t a = 0; a < 3; ++a)
    for (size_t b = 0; b < 3; ++b)
      for (size_t c = 0; c < 3; ++c) {
        const size_t flat = t.flat_index({a, b, c});
        CHECK(flat == (a * 3 + b) * 3 + c);
        CHECK(sum[flat] == doctest::Approx(t[flat] + static_cast<double>(b)));
        CHECK(t.coords(flat) == std::vector<size_t>{a, b, c});
      }

  const LogTable marg = t.marginalize_to({1, 4});
  for (size_t a = 0; a < 3; ++a)
    for (size_t c = 0; c < 3; ++c) {
      double s = 0.0;
      for (size_t b = 0; b < 3; ++b) s += std::exp(t[t.flat_index({a, b, c})]);
      CHECK(marg[marg.flat_index({a, c})] == doctest::Approx(std::log(s)).epsilon(1e-13));
    }
  CHECK(t.axis_of(4) == 2);
  CHECK(t.axis_of(3) == -1);
  LogTable empty({1}, 2, kNegInf);
  CHECK_THROWS_AS(empty.normalize(), Error);
  CHECK_THROWS_AS(t.marginalize_to({3}), Error);
}

TEST_CASE("incremental kernel equals the direct kernel formula in every cell") {
  const DamageModel m = chain4_model();
  const History h = testutil::random_history(m, 5, 42);
  for (const auto& s : m.sensors) {
    LocalKernel k(m, s.id);
    for (long t = 0; t < 5; ++t) {
      k.step(h.at(s.id)[static_cast<size_t>(t)]);
      const std::vector<Eigen::VectorXd> hist(h.at(s.id).begin(), h.at(s.id).begin() + t + 1);
      const LogTable& table = k.table();
      for (size_t flat = 0; flat < table.size(); ++flat) {
        std::map<VarId, long> assign;
        const auto c = table.coords(flat);
        for (size_t a = 0; a < c.size(); ++a)
          assign[s.domain[a]] = bin_change_time(c[a], table.bins(), k.horizon());
        CHECK(table[flat] == doctest::Approx(local_kernel(m, s.id, assign, hist)).epsilon(1e-11));
      }
    }
  }
}

TEST_CASE("message-passing beliefs equal brute-force enumeration on the four-sensor chain") {
  const DamageModel m = chain4_model();
  for (long horizon : {1L, 3L, 5L}) {
    const History h = testutil::random_history(m, horizon, static_cast<std::uint64_t>(100 + horizon));
    const SweepResult r = sweep(m, h);
    for (const auto& s : m.sensors) {
      const auto exact = testutil::brute_marginal(m, s.id, h, horizon);
      CHECK(max_abs_diff(r.beliefs.at(s.id), exact) <= 1e-9);
    }
  }
}

TEST_CASE("beliefs are normalized and adjacent sensors agree on shared variables") {
  const DamageModel m = chain4_model();
  const History h = testutil::random_history(m, 6, 5);
  const SweepResult r = sweep(m, h);
  for (const auto& [id, b] : r.beliefs) {
    double total = 0.0;
    for (size_t k = 0; k < b.log_prob.size(); ++k) total += b.probability(k);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (const auto& [a, b] : m.tree.edges) {
    const VarSet shared = set_intersection(m.sensor(a).domain, m.sensor(b).domain);
    const LogTable ma = r.beliefs.at(a).log_prob.marginalize_to(shared);
    const LogTable mb = r.beliefs.at(b).log_prob.marginalize_to(shared);
    for (size_t k = 0; k < ma.size(); ++k) CHECK(std::exp(ma[k]) == doctest::Approx(std::exp(mb[k])).epsilon(1e-10));
  }
}

TEST_CASE("beliefs do not depend on the root") {
  const DamageModel m = chain4_model();
  const History h = testutil::random_history(m, 5, 77);
  const SweepResult base = sweep(m, h);
  for (SensorId root : m.sensor_ids()) {
    const SweepResult other = sweep(with_root(m, root), h);
    for (const auto& s : m.sensors) {
      const auto& a = base.beliefs.at(s.id).log_prob;
      const auto& b = other.beliefs.at(s.id).log_prob;
      for (size_t k = 0; k < a.size(); ++k) CHECK(std::exp(a[k]) == doctest::Approx(std::exp(b[k])).epsilon(1e-12));
    }
  }
}

TEST_CASE("schedule covers every directed edge once, children before parents") {
  const DamageModel m = chain4_model();
  for (SensorId root : m.sensor_ids()) {
    const auto sched = message_schedule(with_root(m, root));
    CHECK(sched.size() == 2 * m.tree.edges.size());
    std::set<DirectedEdge> seen(sched.begin(), sched.end());
    CHECK(seen.size() == sched.size());
    // Every message is sent only after all of the sender's other inbound messages.
    std::set<DirectedEdge> done;
    for (const auto& [from, to] : sched) {
      for (SensorId nb : m.neighbors(from))
        if (nb != to) CHECK(done.count({nb, from}) == 1);
      done.insert({from, to});
    }
  }
}

TEST_CASE("rule posteriors follow max <= single <= min and match enumeration") {
  const DamageModel m = chain4_model();
  const long horizon = 5;
  History h = testutil::random_history(m, horizon, 9, 1.0);
  const SweepResult r = sweep(m, h);
  const auto& b2 = r.beliefs.at(2);  // domain {1,2,3}
  const auto exact = testutil::brute_marginal(m, 2, h, horizon);
  const size_t bins = static_cast<size_t>(horizon + 1);

  double p_min = 0.0, p_max = 0.0, p1 = 0.0, p3 = 0.0;
  for (size_t a = 0; a < bins; ++a)
    for (size_t b = 0; b < bins; ++b)
      for (size_t c = 0; c < bins; ++c) {
        const double p = exact[(a * bins + b) * bins + c];
        const bool ch1 = a + 1 <= static_cast<size_t>(horizon), ch3 = c + 1 <= static_cast<size_t>(horizon);
        if (ch1 || ch3) p_min += p;
        if (ch1 && ch3) p_max += p;
        if (ch1) p1 += p;
        if (ch3) p3 += p;
      }
  CHECK(posterior_min(b2, {1, 3}) == doctest::Approx(p_min).epsilon(1e-9));
  CHECK(posterior_max(b2, {1, 3}) == doctest::Approx(p_max).epsilon(1e-9));
  CHECK(posterior_single(b2, 1) == doctest::Approx(p1).epsilon(1e-9));
  CHECK(posterior_max(b2, {1, 3}) <= posterior_single(b2, 1) + 1e-15);
  CHECK(posterior_max(b2, {1, 3}) <= posterior_single(b2, 3) + 1e-15);
  CHECK(posterior_single(b2, 3) <= posterior_min(b2, {1, 3}) + 1e-15);

  const RuleValue vmin = evaluate_rule(b2, parse_rule("min:1,3", 0.01));
  const RuleValue vmax = evaluate_rule(b2, parse_rule("max:3,1", 0.01));
  CHECK(vmin.posterior + vmin.ccdf == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vmax.posterior + vmax.ccdf == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vmax.ccdf == doctest::Approx(1.0 - p_max).epsilon(1e-9));
  CHECK_THROWS_AS(posterior_single(b2, 4), Error);
}

TEST_CASE("rule parsing") {
  const auto r = parse_rule("max:3,1", 1e-4);
  CHECK(r.kind == RuleKind::Max);
  CHECK(r.targets == VarSet{1, 3});
  CHECK(r.label() == "max:1,3");
  CHECK(parse_rules("min:1,3;max:1,3|single:3", 0.1).size() == 3);
  CHECK(parse_rule("subset-min:1,2", 0.1).kind == RuleKind::SubsetMin);
  CHECK_THROWS_AS(parse_rule("single:1,2", 0.1), Error);
  CHECK_THROWS_AS(parse_rule("median:1", 0.1), Error);
  CHECK_THROWS_AS(parse_rule("min", 0.1), Error);
  CHECK_THROWS_AS(parse_rule("min:1", 1.0), Error);
  CHECK_THROWS_AS(parse_rules(" ; ", 0.1), Error);
}

TEST_CASE("delay bounds for rules") {
  const DamageModel m = testutil::load_fixture("shake_table.json");
  // Variable 1 is seen by all three floors with KLs 6.27, 6.06, 4.44.
  const double info = single_information(m, 1);
  CHECK(info == doctest::Approx(-std::log(0.999) + 6.27 + 6.06 + 4.44).epsilon(1e-4));
  CHECK(delay_bound_rule(m, parse_rule("single:1", 1e-8)) == doctest::Approx(std::log(1e8) / info));
  CHECK(delay_bound_rule(m, parse_rule("min:1", 1e-8)) == doctest::Approx(std::log(1e8) / info));

  const DamageModel f2 = chain4_model();
  // max over {1,3}: only sensor 2 covers both.
  const double kl = kl_divergence(f2.registry.model_for(2, {1, 3}), f2.registry.sensor(2).pre);
  const double prior = -std::log(1 - 0.1) - std::log(1 - 0.2);
  CHECK(delay_bound_rule(f2, parse_rule("max:1,3", 1e-6)) == doctest::Approx(std::log(1e6) / (prior + kl)));
  CHECK_THROWS_AS(delay_bound_rule(f2, parse_rule("max:1,4", 1e-6)), Error);
}

TEST_CASE("tree validation reports each violation kind") {
  auto kinds = [](const DamageModel& m) {
    std::set<std::string> out;
    for (const auto& v : validate_tree(m)) out.insert(v.kind);
    return out;
  };
  DamageModel m = chain4_model();
  CHECK(validate_tree(m).empty());

  DamageModel cyc = m;
  cyc.tree.edges.push_back({1, 3});
  CHECK(kinds(cyc).count("cycle"));
  CHECK(kinds(cyc).count("no-shared-variable"));

  DamageModel disc = m;
  disc.tree.edges.pop_back();
  CHECK(kinds(disc).count("disconnected"));

  DamageModel rip = m;  // 1-2, 2-4, 4-3: variable 3 lives on {2,3} which are no longer adjacent
  rip.tree.edges = {{1, 2}, {2, 4}, {4, 3}};
  const auto k = kinds(rip);
  CHECK(k.count("running-intersection"));
  CHECK(k.count("no-shared-variable"));

  DamageModel bad = m;
  bad.tree.edges.push_back({4, 9});
  bad.tree.root = 12;
  CHECK(kinds(bad).count("bad-edge"));
  CHECK(kinds(bad).count("bad-root"));
  CHECK_THROWS_AS(build_model(rip), Error);
}

TEST_CASE("local submodel owns every prior of its domain") {
  const DamageModel m = chain4_model();
  const DamageModel sub = local_submodel(m, 2);
  REQUIRE(sub.sensors.size() == 1);
  CHECK(sub.sensors[0].owned_priors == VarSet{1, 2, 3});
  CHECK(sub.variable_ids() == VarSet{1, 2, 3});
  CHECK(covering_sensor(m, {1, 3}) == 2);
  CHECK(covering_sensor(m, {1, 4}) == 0);
}
