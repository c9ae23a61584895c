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

#ifndef TABADV_ADV_TRAINING_HPP_
#define TABADV_ADV_TRAINING_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"
#include "tabadv/cost_model.hpp"
#include "tabadv/models.hpp"
#include "tabadv/search.hpp"

namespace tabadv {

enum class DefenseMode { kCostBounded, kUtilityBounded };

struct AdvTrainConfig {
  DefenseMode mode = DefenseMode::kCostBounded;
  double epsilon = 0.0;  // cost-bounded
  double tau = 0.0;      // utility-bounded
  std::size_t pgd_steps = 20;

  nlohmann::json to_json() const;
  static AdvTrainConfig from_json(const nlohmann::json& doc);
};

// PGD in encoded space: step alpha = 2 * epsilon / steps along the
// l1-normalized input gradient of the loss, projected onto the relaxed cost
// ball around `v` after every step. A zero gradient skips the step.
std::vector<double> pgd_inner_max(const ModelParams& model,
                                  const Encoder& encoder,
                                  const Example& anchor,
                                  std::span<const double> v, int y,
                                  double epsilon, std::size_t steps);

// Called with (dataset row, epsilon, delta) for every perturbation produced
// during training; used to audit budget feasibility.
using PerturbationAudit =
    std::function<void(std::size_t row, double epsilon,
                       std::span<const double> delta)>;

ModelParams adv_train_cost_bounded(const Dataset& data, const Encoder& encoder,
                                   const ArchSpec& arch,
                                   const AdvTrainConfig& cfg,
                                   const TrainHyper& hyper,
                                   const EpochCallback& on_epoch = {},
                                   const PerturbationAudit& audit = {});

// Per-sample budget [g(x) - tau]_+ from the unperturbed sample; samples with
// a zero budget are trained clean.
ModelParams adv_train_utility_bounded(const Dataset& data,
                                      const Encoder& encoder,
                                      const ArchSpec& arch,
                                      const AdvTrainConfig& cfg,
                                      const TrainHyper& hyper,
                                      const EpochCallback& on_epoch = {},
                                      const PerturbationAudit& audit = {});

// Dispatches on cfg.mode and embeds cfg in the model metadata.
ModelParams adv_train(const Dataset& data, const Encoder& encoder,
                      const ArchSpec& arch, const AdvTrainConfig& cfg,
                      const TrainHyper& hyper,
                      const EpochCallback& on_epoch = {},
                      const PerturbationAudit& audit = {});

enum class PgdFailure { kNone, kNotMisclassified, kOverBudget };

struct PgdAttackOutcome {
  AttackOutcome outcome;
  PgdFailure failure = PgdFailure::kNone;
};

// White-box PGD baseline: runs PGD on the encoding of `x`, decodes to the
// nearest feasible example, and audits the true discrete cost. Success
// requires a flipped label and a true cost within epsilon.
PgdAttackOutcome pgd_attack_baseline(const ModelParams& model,
                                     const Encoder& encoder, const Example& x,
                                     double epsilon, std::size_t steps = 20);

}  // namespace tabadv

#endif  // TABADV_ADV_TRAINING_HPP_
