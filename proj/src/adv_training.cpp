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

#include "tabadv/adv_training.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "tabadv/projection.hpp"

namespace tabadv {

using nlohmann::json;

json AdvTrainConfig::to_json() const {
  json j = {{"mode", mode == DefenseMode::kCostBounded ? "cb" : "ub"},
            {"pgd_steps", pgd_steps}};
  if (mode == DefenseMode::kCostBounded) {
    j["epsilon"] = epsilon;
  } else {
    j["tau"] = tau;
  }
  return j;
}

AdvTrainConfig AdvTrainConfig::from_json(const json& doc) {
  AdvTrainConfig c;
  try {
    const std::string mode = doc.at("mode").get<std::string>();
    if (mode == "cb") {
      c.mode = DefenseMode::kCostBounded;
      c.epsilon = doc.at("epsilon").get<double>();
    } else if (mode == "ub") {
      c.mode = DefenseMode::kUtilityBounded;
      c.tau = doc.at("tau").get<double>();
    } else {
      throw ValidationError("unknown defense mode '" + mode + "'");
    }
    c.pgd_steps = doc.value("pgd_steps", c.pgd_steps);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("defense config: ") + e.what());
  }
  return c;
}

std::vector<double> pgd_inner_max(const ModelParams& model,
                                  const Encoder& encoder,
                                  const Example& anchor,
                                  std::span<const double> v, int y,
                                  double epsilon, std::size_t steps) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  if (steps == 0) throw std::invalid_argument("PGD needs at least one step");
  const std::size_t d = v.size();
  std::vector<double> delta(d, 0.0);
  if (epsilon == 0.0) return delta;
  const double alpha = 2.0 * epsilon / static_cast<double>(steps);
  std::vector<double> point(d);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t k = 0; k < d; ++k) point[k] = v[k] + delta[k];
    const LossAndGrad lg = loss_and_grad_input(model, point, y);
    double norm = 0.0;
    for (double g : lg.grad) norm += std::abs(g);
    if (norm == 0.0 || !std::isfinite(norm)) continue;
    for (std::size_t k = 0; k < d; ++k) {
      point[k] = v[k] + delta[k] + alpha * lg.grad[k] / norm;
    }
    delta = project_cost_ball(encoder, anchor, v, point, epsilon);
  }
  return delta;
}

namespace {

void validate_adv_config(const AdvTrainConfig& cfg) {
  if (cfg.pgd_steps == 0) throw ValidationError("pgd_steps must be >= 1");
  if (cfg.mode == DefenseMode::kCostBounded && !(cfg.epsilon >= 0.0)) {
    throw ValidationError("defense epsilon must be >= 0");
  }
  if (cfg.mode == DefenseMode::kUtilityBounded && !(cfg.tau >= 0.0)) {
    throw ValidationError("defense tau must be >= 0");
  }
  if (!std::isfinite(cfg.epsilon) || !std::isfinite(cfg.tau)) {
    throw ValidationError("defense budget must be finite");
  }
}

// Shared loop: `budget_of(row)` gives each sample's cost budget.
template <typename BudgetFn>
ModelParams adv_train_loop(const Dataset& data, const Encoder& encoder,
                           const ArchSpec& arch, const AdvTrainConfig& cfg,
                           const TrainHyper& hyper, BudgetFn budget_of,
                           const EpochCallback& on_epoch,
                           const PerturbationAudit& audit) {
  validate_adv_config(cfg);
  const Eigen::MatrixXd x = encode_rows(encoder, data.rows);
  const std::vector<int> y = labels_of(data.rows);
  const auto d = static_cast<std::size_t>(x.cols());
  BatchPerturber perturb = [&](const ModelParams& model,
                               std::span<const std::size_t> rows,
                               Eigen::MatrixXd& batch) {
    std::vector<double> v(d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double eps = budget_of(rows[r]);
      if (eps == 0.0) continue;
      const auto br = static_cast<Eigen::Index>(r);
      for (std::size_t k = 0; k < d; ++k) {
        v[k] = batch(br, static_cast<Eigen::Index>(k));
      }
      const std::vector<double> delta =
          pgd_inner_max(model, encoder, data.rows[rows[r]], v, y[rows[r]], eps,
                        cfg.pgd_steps);
      if (audit) audit(rows[r], eps, delta);
      for (std::size_t k = 0; k < d; ++k) {
        batch(br, static_cast<Eigen::Index>(k)) += delta[k];
      }
    }
  };
  ModelParams model = train_encoded(x, y, arch, hyper, perturb, on_epoch);
  model.metadata["adv_train"] = cfg.to_json();
  return model;
}

}  // namespace

ModelParams adv_train_cost_bounded(const Dataset& data, const Encoder& encoder,
                                   const ArchSpec& arch,
                                   const AdvTrainConfig& cfg,
                                   const TrainHyper& hyper,
                                   const EpochCallback& on_epoch,
                                   const PerturbationAudit& audit) {
  const double eps = cfg.epsilon;
  return adv_train_loop(
      data, encoder, arch, cfg, hyper, [eps](std::size_t) { return eps; },
      on_epoch, audit);
}

ModelParams adv_train_utility_bounded(const Dataset& data,
                                      const Encoder& encoder,
                                      const ArchSpec& arch,
                                      const AdvTrainConfig& cfg,
                                      const TrainHyper& hyper,
                                      const EpochCallback& on_epoch,
                                      const PerturbationAudit& audit) {
  std::vector<double> budgets(data.rows.size());
  for (std::size_t r = 0; r < data.rows.size(); ++r) {
    budgets[r] = cost_bound_for_margin(gain(data.schema, data.rows[r]), cfg.tau);
  }
  return adv_train_loop(
      data, encoder, arch, cfg, hyper,
      [&budgets](std::size_t row) { return budgets[row]; }, on_epoch, audit);
}

ModelParams adv_train(const Dataset& data, const Encoder& encoder,
                      const ArchSpec& arch, const AdvTrainConfig& cfg,
                      const TrainHyper& hyper, const EpochCallback& on_epoch,
                      const PerturbationAudit& audit) {
  if (cfg.mode == DefenseMode::kCostBounded) {
    return adv_train_cost_bounded(data, encoder, arch, cfg, hyper, on_epoch,
                                  audit);
  }
  return adv_train_utility_bounded(data, encoder, arch, cfg, hyper, on_epoch,
                                   audit);
}

PgdAttackOutcome pgd_attack_baseline(const ModelParams& model,
                                     const Encoder& encoder, const Example& x,
                                     double epsilon, std::size_t steps) {
  const auto started = std::chrono::steady_clock::now();
  const EncodedVector v = encoder.encode(x);
  const std::vector<double> delta =
      pgd_inner_max(model, encoder, x, v, x.label, epsilon, steps);
  EncodedVector moved = v;
  for (std::size_t k = 0; k < moved.size(); ++k) moved[k] += delta[k];
  Example candidate = encoder.decode(moved, x.label);

  PgdAttackOutcome result;
  AttackOutcome& out = result.outcome;
  out.epsilon = epsilon;
  out.expansions = epsilon == 0.0 ? 0 : steps;
  out.queries = out.expansions + 1;
  const double cost = total_cost(encoder.schema(), encoder.costs(), x,
                                 candidate);
  const int label = predict_label(model, encoder.encode(candidate));
  const double g = encoder.schema().gain.mode == GainMode::kVariable
                       ? gain(encoder.schema(), candidate)
                       : gain(encoder.schema(), x);
  if (label == x.label) {
    result.failure = PgdFailure::kNotMisclassified;
    out.status = AttackStatus::kNoSolution;
    out.gain = gain(encoder.schema(), x);
  } else if (!(cost <= epsilon)) {
    result.failure = PgdFailure::kOverBudget;
    out.status = AttackStatus::kBudgetExhausted;
    out.gain = gain(encoder.schema(), x);
  } else {
    out.status = AttackStatus::kSuccess;
    out.cost = cost;
    out.gain = g;
    out.utility = utility(g, cost);
    out.adversarial = std::move(candidate);
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              started)
                    .count();
  return result;
}

}  // namespace tabadv
