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

#ifndef TABADV_HARNESS_HPP_
#define TABADV_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabadv/adv_training.hpp"
#include "tabadv/cost_model.hpp"
#include "tabadv/domain.hpp"
#include "tabadv/models.hpp"
#include "tabadv/search.hpp"

namespace tabadv {

// One attacked example. Metrics count only initially correct examples.
struct EvaluatedOutcome {
  std::size_t example_id = 0;
  bool initially_correct = false;
  Example initial;
  AttackOutcome outcome;
};

struct Metrics {
  double accuracy = 0.0;
  double success_rate = 0.0;
  std::optional<double> avg_cost;
  std::optional<double> avg_utility;
  double success_time_ratio = 0.0;  // success percentage per second
  std::uint64_t query_total = 0;
  std::size_t attacked = 0;
  std::size_t successes = 0;
  double seconds = 0.0;
};

double success_rate(std::span<const EvaluatedOutcome> outcomes);
std::optional<double> avg_adversarial_cost(
    std::span<const EvaluatedOutcome> outcomes);
std::optional<double> avg_adversarial_utility(
    std::span<const EvaluatedOutcome> outcomes);
// Accuracy of the majority-class constant predictor.
double random_baseline(std::span<const Example> test);

Metrics compute_metrics(std::span<const EvaluatedOutcome> outcomes,
                        double accuracy);

// Attack specifications the harness can run: graph search or the PGD
// baseline (cost-bounded only).
struct GridAttack {
  AttackSpec search;
  bool pgd = false;
  std::size_t pgd_steps = 20;

  std::string label() const;
};

// Runs `attack` on every example. Each example gets its own query counter;
// examples are processed in parallel when `threads` > 1 and results are
// returned in input order.
std::vector<EvaluatedOutcome> evaluate_attack(const ModelParams& model,
                                              const Encoder& encoder,
                                              std::span<const Example> examples,
                                              const GridAttack& attack,
                                              unsigned threads = 0);

// Costs for a mask_mutable schema: categorical tables grow by the masked
// category with unit cost to and from it.
CostSpec masked_costs(const Schema& masked, const CostSpec& original);

// Trains on mask_mutable(data) and lifts the result back to the original
// encoding with zero weight on every mutable coordinate, so its score does
// not depend on anything the adversary controls.
ModelParams train_robust_baseline(const Dataset& data, const Encoder& encoder,
                                  const ArchSpec& arch,
                                  const TrainHyper& hyper);

struct ModelEntry {
  std::string name;
  ArchSpec arch;
  TrainHyper hyper;
  std::optional<AdvTrainConfig> defense;
  bool robust = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::optional<SyntheticConfig> synthetic;
  std::filesystem::path schema_path;
  std::filesystem::path csv_path;
  double train_fraction = 0.8;
  int source_label = 1;
  std::size_t max_attack_examples = 200;
  std::vector<ModelEntry> models;
  std::vector<GridAttack> attacks;
  unsigned threads = 0;

  // Relative paths resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& doc,
                                    const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
};

struct CellReport {
  std::string model;
  std::string attack;
  std::string defense;         // "none", "cb", "ub", "robust"
  double defense_budget = 0.0;  // epsilon or tau
  Metrics metrics;
};

struct ExperimentReport {
  Schema schema;
  CostSpec costs;
  double random_baseline_accuracy = 0.0;
  std::vector<CellReport> cells;
  std::vector<nlohmann::json> outcomes;  // JSON-lines records
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Writes metrics.csv, outcomes.jsonl, tradeoff.csv and schema.json.
void write_report(const ExperimentReport& report,
                  const std::filesystem::path& dir);

// Full JSON-lines record for one evaluated example.
nlohmann::json evaluated_record(const Schema& schema,
                                const EvaluatedOutcome& e,
                                const GridAttack& attack,
                                const std::string& model_name);

// Recomputes every stored cost / utility from the adversarial examples with
// the cost model alone and checks metrics.csv against the records. Returns
// one message per discrepancy (empty when the report is consistent).
std::vector<std::string> audit_report(const std::filesystem::path& dir,
                                      double tolerance = 1e-6);

}  // namespace tabadv

#endif  // TABADV_HARNESS_HPP_
