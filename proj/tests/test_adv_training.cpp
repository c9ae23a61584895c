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
#include <vector>

#include "doctest.h"
#include "tabadv/adv_training.hpp"
#include "tabadv/projection.hpp"
#include "test_support.hpp"

using namespace tabadv;
using namespace tabadv::testing;

namespace {

Dataset small_synthetic(std::size_t rows, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.rows = rows;
  return generate_synthetic(cfg, seed);
}

TrainHyper quick_hyper() {
  TrainHyper h;
  h.epochs = 3;
  h.batch_size = 32;
  h.seed = 11;
  return h;
}

AdvTrainConfig cb(double eps, std::size_t steps = 5) {
  AdvTrainConfig c;
  c.mode = DefenseMode::kCostBounded;
  c.epsilon = eps;
  c.pgd_steps = steps;
  return c;
}

AdvTrainConfig ub(double tau, std::size_t steps = 5) {
  AdvTrainConfig c;
  c.mode = DefenseMode::kUtilityBounded;
  c.tau = tau;
  c.pgd_steps = steps;
  return c;
}

}  // namespace

TEST_CASE("PGD inner maximization") {
  const Dataset data = small_synthetic(200, 1);
  const Encoder enc(data.schema, synthetic_costs(data.schema));
  Rng rng(2);
  const ModelParams m = random_model(rng, ArchSpec::parse("mlp:8"), enc.dim(), 0.0, 0.5);

  for (int t = 0; t < 300; ++t) {
    const Example& x = data.rows[rng.below(data.rows.size())];
    const EncodedVector v = enc.encode(x);
    CHECK(pgd_inner_max(m, enc, x, v, x.label, 0.0, 20) == std::vector<double>(v.size(), 0.0));

    const double eps = rng.uniform(0.1, 20.0);
    const std::size_t steps = 1 + rng.below(25);
    const auto delta = pgd_inner_max(m, enc, x, v, x.label, eps, steps);
    std::vector<double> moved(v.begin(), v.end());
    for (std::size_t k = 0; k < moved.size(); ++k) moved[k] += delta[k];
    CHECK(enc.relaxed_cost(x, v, moved) <= eps + 1e-9);

    // One step unrolled by hand.
    const auto one = pgd_inner_max(m, enc, x, v, x.label, eps, 1);
    const LossAndGrad g = loss_and_grad_input(m, v, x.label);
    double norm = 0.0;
    for (double gi : g.grad) norm += std::abs(gi);
    if (norm == 0.0) {
      CHECK(one == std::vector<double>(v.size(), 0.0));
      continue;
    }
    std::vector<double> target(v.begin(), v.end());
    for (std::size_t k = 0; k < target.size(); ++k) target[k] += 2.0 * eps * g.grad[k] / norm;
    CHECK(one == project_cost_ball(enc, x, v, target, eps));
  }

  // Zero gradient leaves delta at zero.
  const ModelParams flat = init_model(ArchSpec::parse("lr"), enc.dim(), 0.0, 1);
  const EncodedVector v0 = enc.encode(data.rows[0]);
  auto zero_grad = flat;
  zero_grad.layers[0].weight.setZero();
  CHECK(pgd_inner_max(zero_grad, enc, data.rows[0], v0, 1, 5.0, 10) ==
        std::vector<double>(v0.size(), 0.0));
  CHECK_THROWS(pgd_inner_max(flat, enc, data.rows[0], v0, 1, -1.0, 10));
  CHECK_THROWS(pgd_inner_max(flat, enc, data.rows[0], v0, 1, 1.0, 0));
}

TEST_CASE("PGD raises the batch loss") {
  const Dataset data = small_synthetic(2000, 3);
  const Encoder enc(data.schema, synthetic_costs(data.schema));
  TrainHyper h;
  h.seed = 4;
  h.epochs = 10;
  const ModelParams m = train(data, enc, ArchSpec::parse("lr"), h);
  std::size_t batches = 0;
  std::size_t raised = 0;
  for (std::size_t start = 0; start + 64 <= data.rows.size(); start += 64) {
    double clean = 0.0;
    double adv = 0.0;
    for (std::size_t r = start; r < start + 64; ++r) {
      const Example& x = data.rows[r];
      const EncodedVector v = enc.encode(x);
      const auto delta = pgd_inner_max(m, enc, x, v, x.label, 3.0, 20);
      std::vector<double> moved(v.begin(), v.end());
      for (std::size_t k = 0; k < moved.size(); ++k) moved[k] += delta[k];
      clean += loss_and_grad_input(m, v, x.label).loss;
      adv += loss_and_grad_input(m, moved, x.label).loss;
    }
    ++batches;
    raised += adv >= clean;
  }
  CHECK(static_cast<double>(raised) >= 0.95 * static_cast<double>(batches));
}

TEST_CASE("adversarial training reductions") {
  const Dataset data = small_synthetic(300, 5);
  const Encoder enc(data.schema, synthetic_costs(data.schema));
  const TrainHyper h = quick_hyper();
  for (const char* arch : {"lr", "mlp:6"}) {
    const ArchSpec a = ArchSpec::parse(arch);
    const ModelParams plain = train(data, enc, a, h);
    const ModelParams zero = adv_train(data, enc, a, cb(0.0), h);
    CHECK(flatten_params(zero) == flatten_params(plain));
    // tau above every gain: all budgets are zero.
    const ModelParams high = adv_train(data, enc, a, ub(1e6), h);
    CHECK(flatten_params(high) == flatten_params(plain));
  }

  // tau = 0 gives per-sample budgets equal to the gains.
  std::size_t seen = 0;
  adv_train(data, enc, ArchSpec::parse("lr"), ub(0.0, 2), h, {},
            [&](std::size_t row, double eps, std::span<const double>) {
              CHECK(eps == gain(data.schema, data.rows[row]));
              ++seen;
            });
  CHECK(seen == 3 * data.rows.size());

  // Constant gain: UB(tau) and CB(G - tau) coincide.
  Dataset constant = data;
  constant.schema.gain.column.reset();
  constant.schema.gain.constant = 120.0;
  constant.schema.gain.mode = GainMode::kConstant;
  const Encoder cenc(constant.schema, synthetic_costs(constant.schema));
  const ModelParams u = adv_train(constant, cenc, ArchSpec::parse("mlp:6"), ub(117.0), h);
  const ModelParams c = adv_train(constant, cenc, ArchSpec::parse("mlp:6"), cb(3.0), h);
  CHECK(flatten_params(u) == flatten_params(c));

  // Same seed, same parameters.
  const ModelParams again = adv_train(constant, cenc, ArchSpec::parse("mlp:6"), cb(3.0), h);
  CHECK(flatten_params(again) == flatten_params(c));
  CHECK(c.metadata["adv_train"]["mode"] == "cb");
  const AdvTrainConfig back = AdvTrainConfig::from_json(c.metadata["adv_train"]);
  CHECK(back.epsilon == 3.0);
  CHECK(back.pgd_steps == 5);

  AdvTrainConfig bad = cb(1.0);
  bad.pgd_steps = 0;
  CHECK_THROWS_AS(adv_train(data, enc, ArchSpec::parse("lr"), bad, h), ValidationError);
  CHECK_THROWS_AS(adv_train(data, enc, ArchSpec::parse("lr"), cb(-1.0), h), ValidationError);
}

TEST_CASE("training perturbations respect their budgets") {
  const Dataset data = small_synthetic(300, 6);
  const Encoder enc(data.schema, synthetic_costs(data.schema));
  const TrainHyper h = quick_hyper();
  std::size_t audited = 0;
  auto audit = [&](std::size_t row, double eps, std::span<const double> delta) {
    const Example& x = data.rows[row];
    const EncodedVector v = enc.encode(x);
    std::vector<double> moved(v.begin(), v.end());
    for (std::size_t k = 0; k < moved.size(); ++k) moved[k] += delta[k];
    CHECK(enc.relaxed_cost(x, v, moved) <= eps + 1e-9);
    ++audited;
  };
  adv_train(data, enc, ArchSpec::parse("mlp:6"), cb(4.0), h, {}, audit);
  adv_train(data, enc, ArchSpec::parse("lr"), ub(200.0), h, {}, audit);
  CHECK(audited > 3 * data.rows.size());
}

TEST_CASE("PGD attack baseline") {
  const Dataset data = small_synthetic(600, 7);
  const Encoder enc(data.schema, synthetic_costs(data.schema));
  TrainHyper h;
  h.seed = 8;
  h.epochs = 10;
  const ModelParams m = train(data, enc, ArchSpec::parse("mlp:8"), h);
  Rng rng(9);
  std::size_t successes = 0;
  for (int run = 0; run < 1000; ++run) {
    Example x = data.rows[rng.below(data.rows.size())];
    x.label = predict_label(m, enc.encode(x));
    const double eps = rng.uniform(0.0, 30.0);
    const PgdAttackOutcome r = pgd_attack_baseline(m, enc, x, eps, 20);
    if (r.outcome.success()) {
      ++successes;
      CHECK(r.failure == PgdFailure::kNone);
      CHECK(total_cost(data.schema, enc.costs(), x, *r.outcome.adversarial) <= eps);
      CHECK(predict_label(m, enc.encode(*r.outcome.adversarial)) != x.label);
      CHECK(r.outcome.utility == r.outcome.gain - r.outcome.cost);
    } else {
      CHECK(r.failure != PgdFailure::kNone);
    }
    CHECK(r.outcome.queries == r.outcome.expansions + 1);
  }
  CHECK(successes > 0);

  // Zero budget: decoded example is x itself.
  Example x = data.rows[0];
  x.label = predict_label(m, enc.encode(x));
  const PgdAttackOutcome z = pgd_attack_baseline(m, enc, x, 0.0, 20);
  CHECK_FALSE(z.outcome.success());
  CHECK(z.failure == PgdFailure::kNotMisclassified);
  CHECK(z.outcome.expansions == 0);
  Example flipped = x;
  flipped.label = 1 - x.label;
  CHECK(pgd_attack_baseline(m, enc, flipped, 0.0, 20).outcome.success());
}
