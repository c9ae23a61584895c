// Copyright 2026 The tabadv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "tabadv/search.hpp"
#include "test_support.hpp"

using namespace tabadv;
using namespace tabadv::testing;

namespace {

const Scoring kUcs{ScoringKind::kUniformCost, 1.0};
const Scoring kUg{ScoringKind::kUniversalGreedy, 1.0};

// A random problem with a random LR or MLP target and an example that the
// target classifies as its own label.
struct Instance {
  RandomProblem p;
  ModelParams model;
  Example x;
};

Instance random_instance(Rng& rng, std::size_t max_nodes) {
  Instance in{random_problem(rng, 2 + rng.below(3), max_nodes), {}, {}};
  const Encoder enc(in.p.schema, in.p.costs);
  in.model = random_model(rng, ArchSpec::parse(rng.uniform() < 0.5 ? "lr" : "mlp:4"),
                          enc.dim(), 0.0, 1.5);
  in.x = random_example(rng, in.p.schema, 0);
  in.x.label = predict_label(in.model, enc.encode(in.x));
  return in;
}

std::function<int(const Example&)> label_fn(const ModelParams& m, const Encoder& enc) {
  return [&m, &enc](const Example& e) { return predict_label(m, enc.encode(e)); };
}

}  // namespace

TEST_CASE("scoring formulas") {
  CHECK(score_universal_greedy(0.9, 0.4, 2.0, 1) == doctest::Approx(-0.25));
  CHECK(score_universal_greedy(0.9, 0.4, 2.0, 1) < score_universal_greedy(0.9, 0.8, 2.0, 1));
  CHECK(score_universal_greedy(0.3, 0.3, 7.0, 1) == 0.0);
  CHECK(score_universal_greedy(0.3, 0.3, 0.5, 0) == 0.0);
  CHECK(score_universal_greedy(0.9, 0.4, 1.0, 1) ==
        doctest::Approx(2.0 * score_universal_greedy(0.9, 0.4, 2.0, 1)));
  // Source 0: raising f moves toward the target.
  CHECK(score_universal_greedy(0.2, 0.6, 2.0, 0) < score_universal_greedy(0.2, 0.3, 2.0, 0));
  CHECK(score_universal_greedy(0.2, 0.6, 2.0, 0) == doctest::Approx(-0.2));

  CHECK(score_astar(3.0, 0.5, 1.0) == 3.5);
  CHECK(score_astar(3.0, 0.0, 1.0) == 3.0);
  Rng rng(1);
  for (int t = 0; t < 500; ++t) {
    const double c = rng.uniform(0.0, 5.0);
    const double h1 = rng.uniform();
    const double h2 = rng.uniform();
    if (std::abs(h1 - h2) < 1e-6) continue;
    CHECK((score_astar(c, h1, 1e9) < score_astar(c, h2, 1e9)) == (h1 < h2));
  }

  CHECK(score_potential_search(0.5, 0.0, 10.0) == doctest::Approx(0.05));
  CHECK(score_potential_search(0.5, 9.999999, 10.0) > 1e5);
  CHECK(std::isinf(score_potential_search(0.5, 10.0, 10.0)));
  for (int t = 0; t < 500; ++t) {
    const double eps = rng.uniform(0.1, 20.0);
    const double c = rng.uniform(0.0, eps * 0.999);
    const double h = rng.uniform();
    CHECK(score_potential_search(h, c, eps) == doctest::Approx(h / (eps - c)).epsilon(1e-12));
  }

  CHECK(Scoring::parse("ug").kind == ScoringKind::kUniversalGreedy);
  CHECK(Scoring::parse("astar:2.5").greediness == 2.5);
  CHECK(Scoring::parse("ps").kind == ScoringKind::kPotentialSearch);
  CHECK_THROWS(Scoring::parse("dfs"));
}

TEST_CASE("bounded priority queue") {
  BoundedPriorityQueue<int> q(2);
  CHECK(q.push(3.0, 1));
  CHECK(q.push(1.0, 2));
  CHECK_FALSE(q.push(5.0, 3));  // worse than everything: rejected
  CHECK_FALSE(q.push(2.0, 4));  // evicts the 3.0 entry
  CHECK(q.size() == 2);
  CHECK(q.top_score() == 1.0);
  CHECK(q.pop() == 2);
  CHECK(q.pop() == 4);
  CHECK(q.empty());

  // Ties: earlier insertion pops first and a tie never evicts.
  BoundedPriorityQueue<int> t(2);
  t.push(1.0, 10);
  t.push(1.0, 11);
  CHECK_FALSE(t.push(1.0, 12));
  CHECK(t.pop() == 10);
  CHECK(t.pop() == 11);

  BoundedPriorityQueue<int> u(kUnboundedBeam);
  for (int i = 0; i < 1000; ++i) u.push(static_cast<double>(1000 - i), i);
  CHECK(u.size() == 1000);
  CHECK(u.pop() == 999);

  // Against a sorted reference with eviction.
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t cap = 1 + rng.below(6);
    BoundedPriorityQueue<int> bq(cap);
    std::vector<std::pair<double, int>> ref;
    for (int i = 0; i < 40; ++i) {
      const double s = static_cast<double>(rng.below(8));
      bq.push(s, i);
      ref.emplace_back(s, i);
      std::stable_sort(ref.begin(), ref.end(),
                       [](auto& a, auto& b) { return a.first < b.first; });
      if (ref.size() > cap) ref.pop_back();
      if (rng.uniform() < 0.3 && !ref.empty()) {
        CHECK(bq.pop() == ref.front().second);
        ref.erase(ref.begin());
      }
    }
    CHECK(bq.size() == ref.size());
  }
}

TEST_CASE("goal at the root and zero budget") {
  const Schema s = schema_of({categorical("a", 3, true), numeric("n", {0, 1, 2}, true)});
  const CostSpec c = uniform_costs(s, 1.0, 1.0);
  const Encoder enc(s, c);
  ModelParams m = init_model(ArchSpec::parse("lr"), enc.dim(), 0.0, 1);
  m.layers[0].bias(0) = 3.0;  // everything is class 1
  const auto box = wrap_blackbox(m, enc);

  const Example goal = example({0, 0}, 0);
  for (const Scoring& sc : {kUg, kUcs, Scoring::parse("astar"), Scoring::parse("greedy")}) {
    const AttackOutcome o = attack_cost_bounded(*box, s, c, goal, 5.0, sc, 1);
    CHECK(o.success());
    CHECK(o.cost == 0.0);
    CHECK(o.expansions == 0);
  }
  CHECK(attack_min_cost(*box, s, c, goal).cost == 0.0);

  // No goal anywhere: zero budget and unbounded budget both fail.
  const Example x = example({1, 1}, 1);
  const AttackOutcome zero = attack_cost_bounded(*box, s, c, x, 0.0, kUg, 1);
  CHECK_FALSE(zero.success());
  CHECK(zero.status == AttackStatus::kBudgetExhausted);
  CHECK(zero.expansions == 1);
  const AttackOutcome none = attack_min_cost(*box, s, c, x);
  CHECK(none.status == AttackStatus::kNoSolution);
  CHECK(none.expansions == 9);

  const AttackOutcome capped = attack_cost_bounded(*box, s, c, x, kInfinity, kUcs,
                                                   kUnboundedBeam, 3);
  CHECK(capped.status == AttackStatus::kIterationCap);
  CHECK(capped.expansions == 3);

  CHECK_THROWS(attack_cost_bounded(*box, s, c, x, kInfinity, Scoring::parse("ps"), 1));
  CHECK_THROWS(attack_cost_bounded(*box, s, c, x, -1.0, kUg, 1));
  CHECK_THROWS(attack_max_utility(*box, s, c, x, kInfinity, kUg, 1));
  CHECK_THROWS(attack_utility_bounded(*box, s, c, x, -1.0, kUg, 1));
}

TEST_CASE("uniform-cost search is exact") {
  Rng rng(31);
  int successes = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Instance in = random_instance(rng, 10000);
    const Encoder enc(in.p.schema, in.p.costs);
    const auto box = wrap_blackbox(in.model, enc);
    const double brute =
        brute_force_min_cost(in.p.schema, in.p.costs, in.x, label_fn(in.model, enc));
    const AttackOutcome o = attack_min_cost(*box, in.p.schema, in.p.costs, in.x);
    if (std::isinf(brute)) {
      CHECK(o.status == AttackStatus::kNoSolution);
      continue;
    }
    ++successes;
    REQUIRE(o.success());
    CHECK(o.cost == brute);
    CHECK(predict_label(in.model, enc.encode(*o.adversarial)) != in.x.label);
    CHECK(o.cost == total_cost(in.p.schema, in.p.costs, in.x, *o.adversarial));

    // Monotone evadability around c*.
    const double below = std::nextafter(brute, 0.0);
    CHECK(attack_cost_bounded(*box, in.p.schema, in.p.costs, in.x, brute, kUcs,
                              kUnboundedBeam).success());
    CHECK(attack_cost_bounded(*box, in.p.schema, in.p.costs, in.x, brute * 1.5 + 1.0,
                              kUcs, kUnboundedBeam).success());
    if (brute > 0.0) {
      CHECK_FALSE(attack_cost_bounded(*box, in.p.schema, in.p.costs, in.x, below, kUcs,
                                      kUnboundedBeam).success());
    }

    // UCS never costs more than UG when both succeed.
    const AttackOutcome ug =
        attack_cost_bounded(*box, in.p.schema, in.p.costs, in.x, kInfinity, kUg, 1);
    if (ug.success()) CHECK(o.cost <= ug.cost + 1e-12);
  }
  CHECK(successes > 50);
}

TEST_CASE("success agrees with reachability under budget") {
  Rng rng(44);
  for (int trial = 0; trial < 300; ++trial) {
    const Instance in = random_instance(rng, 64);
    const Encoder enc(in.p.schema, in.p.costs);
    const auto box = wrap_blackbox(in.model, enc);
    const double eps = rng.uniform(0.0, 6.0);
    bool reachable = false;
    for (const Example& z : reachable_examples(in.p.schema, in.x)) {
      if (predict_label(in.model, enc.encode(z)) != in.x.label &&
          total_cost(in.p.schema, in.p.costs, in.x, z) <= eps) {
        reachable = true;
      }
    }
    for (const Scoring& sc : {kUcs, kUg, Scoring::parse("astar"), Scoring::parse("ps"),
                              Scoring::parse("greedy")}) {
      const AttackOutcome o =
          attack_cost_bounded(*box, in.p.schema, in.p.costs, in.x, eps, sc, kUnboundedBeam);
      CHECK(o.success() == reachable);
    }
  }
}

TEST_CASE("budget soundness and query accounting") {
  Rng rng(55);
  const char* scorings[] = {"ug", "ucs", "astar", "astar:3", "ps", "greedy"};
  for (int run = 0; run < 1000; ++run) {
    const Instance in = random_instance(rng, 4096);
    const Encoder enc(in.p.schema, in.p.costs);
    const auto box = wrap_blackbox(in.model, enc);
    const double eps = rng.uniform(0.0, 8.0);
    const Scoring sc = Scoring::parse(scorings[run % 6]);
    const std::size_t beam = run % 3 == 0 ? kUnboundedBeam : 1 + rng.below(4);
    const std::uint64_t before = box->queries();
    const AttackOutcome o = attack_cost_bounded(*box, in.p.schema, in.p.costs, in.x, eps, sc, beam);
    CHECK(o.queries == box->queries() - before);
    if (o.success()) {
      CHECK(o.utility == o.gain - o.cost);
      const double audit = total_cost(in.p.schema, in.p.costs, in.x, *o.adversarial);
      CHECK(audit <= eps + 1e-9);
      CHECK(predict_label(in.model, enc.encode(*o.adversarial)) == 1 - in.x.label);
    }
    // Determinism.
    const AttackOutcome again = attack_cost_bounded(*box, in.p.schema, in.p.costs, in.x, eps, sc, beam);
    CHECK(again.status == o.status);
    CHECK(again.expansions == o.expansions);
    CHECK(again.queries == o.queries);
    CHECK(again.adversarial == o.adversarial);
  }
}

TEST_CASE("utility-bounded reduces to cost-bounded") {
  Rng rng(66);
  for (int trial = 0; trial < 200; ++trial) {
    Instance in = random_instance(rng, 4096);
    in.p.schema.gain.constant = 200.0;
    const Encoder enc(in.p.schema, in.p.costs);
    const auto box = wrap_blackbox(in.model, enc);
    const double tau = rng.uniform(190.0, 200.0);
    const Scoring sc = trial % 2 ? kUg : kUcs;
    const AttackOutcome ub = attack_utility_bounded(*box, in.p.schema, in.p.costs, in.x, tau, sc, 2);
    const AttackOutcome cb =
        attack_cost_bounded(*box, in.p.schema, in.p.costs, in.x, 200.0 - tau, sc, 2);
    CHECK(ub.status == cb.status);
    CHECK(ub.adversarial == cb.adversarial);
    CHECK(ub.cost == cb.cost);
    CHECK(ub.expansions == cb.expansions);
    CHECK(ub.epsilon == doctest::Approx(200.0 - tau));
    if (ub.success()) CHECK(ub.utility >= tau - 1e-9);
  }

  // tau above the gain: zero budget; tau = 0: the whole gain.
  const Schema s = schema_of({categorical("a", 3, true)}, 200.0);
  const CostSpec c = uniform_costs(s, 1.0, 1.0);
  const Encoder enc(s, c);
  ModelParams m = init_model(ArchSpec::parse("lr"), enc.dim(), 0.0, 1);
  m.layers[0].weight(0, 0) = 5.0;  // category a is class 1, others class 0
  const auto box = wrap_blackbox(m, enc);
  const Example x = example({0}, 1);
  REQUIRE(predict_label(m, enc.encode(x)) == 1);
  const AttackOutcome high = attack_utility_bounded(*box, s, c, x, 250.0, kUg, 1);
  CHECK_FALSE(high.success());
  CHECK(high.epsilon == 0.0);
  const AttackOutcome zero = attack_utility_bounded(*box, s, c, x, 0.0, kUg, 1);
  CHECK(zero.success());
  CHECK(zero.epsilon == 200.0);
}

TEST_CASE("utility maximization") {
  // Two goals at costs 2 and 5 under constant gain.
  const Schema s = schema_of({categorical("a", 2, true), categorical("b", 2, true)}, 50.0);
  CostSpec c = uniform_costs(s, 1.0, 1.0);
  c.categorical[0].table = {0, 2, 2, 0};
  c.categorical[1].table = {0, 5, 5, 0};
  const Encoder enc(s, c);
  // Goal iff exactly one of a, b is set: XOR is not linear, so use a
  // custom scorer.
  const BlackBox box([](const Example& e) {
    return (e.codes[0] ^ e.codes[1]) ? 0.1 : 0.9;
  });
  const Example x = example({0, 0}, 1);
  const AttackOutcome o = attack_max_utility(box, s, c, x, 10.0, kUg, kUnboundedBeam);
  REQUIRE(o.success());
  CHECK(o.cost == 2.0);
  CHECK(o.adversarial->codes == std::vector<std::uint32_t>{1, 0});
  CHECK(o.utility == 48.0);

  // A single goal within budget matches the cost-bounded answer.
  const AttackOutcome one = attack_max_utility(box, s, c, x, 3.0, kUg, 1);
  const AttackOutcome cb = attack_cost_bounded(box, s, c, x, 3.0, kUg, 1);
  CHECK(one.adversarial == cb.adversarial);

  // Variable gain against brute force.
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    Instance in = random_instance(rng, 2000);
    std::size_t col = in.p.schema.size();
    for (std::size_t i = 0; i < in.p.schema.size(); ++i) {
      if (!in.p.schema.features[i].categorical()) col = i;
    }
    if (col == in.p.schema.size()) continue;
    in.p.schema.gain.constant.reset();
    in.p.schema.gain.column = in.p.schema.features[col].name;
    in.p.schema.gain.mode = GainMode::kVariable;
    const Encoder enc2(in.p.schema, in.p.costs);
    const auto ob = wrap_blackbox(in.model, enc2);
    const double eps = rng.uniform(0.5, 6.0);
    double best = -kInfinity;
    for (const Example& z : reachable_examples(in.p.schema, in.x)) {
      const double cost = total_cost(in.p.schema, in.p.costs, in.x, z);
      if (cost > eps || predict_label(in.model, enc2.encode(z)) == in.x.label) continue;
      best = std::max(best, gain(in.p.schema, z) - cost);
    }
    const AttackOutcome mu =
        attack_max_utility(*ob, in.p.schema, in.p.costs, in.x, eps, kUg, kUnboundedBeam);
    if (std::isinf(best)) {
      CHECK_FALSE(mu.success());
    } else {
      REQUIRE(mu.success());
      CHECK(mu.utility == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("attack spec and records") {
  AttackSpec spec;
  spec.mode = BudgetMode::kCostBounded;
  spec.budget = 10.0;
  spec.scoring = kUg;
  spec.beam = 1;
  CHECK(spec.label() == "cb:10/ug/B=1");
  spec.mode = BudgetMode::kMinCost;
  spec.beam = kUnboundedBeam;
  CHECK(spec.label() == "mincost/ucs/B=inf");

  AttackSpec ps;
  ps.scoring = Scoring::parse("ps");
  ps.budget = kInfinity;
  CHECK_THROWS(validate_attack_spec(ps));

  AttackOutcome o;
  o.status = AttackStatus::kSuccess;
  o.cost = 1.5;
  o.gain = 10.0;
  o.utility = 8.5;
  o.expansions = 3;
  o.queries = 7;
  AttackSpec cb;
  cb.budget = 2.0;
  const auto rec = outcome_record(o, cb, 4);
  for (const char* key : {"example_id", "status", "cost", "gain", "utility", "expansions",
                          "queries", "seconds", "budget_mode", "epsilon_or_tau", "scoring",
                          "beam"}) {
    CHECK(rec.contains(key));
  }
  CHECK(rec["status"] == "success");
  CHECK(rec["example_id"] == 4);
  CHECK(parse_status("iteration_cap") == AttackStatus::kIterationCap);
  CHECK(parse_budget_mode("ub") == BudgetMode::kUtilityBounded);
}
