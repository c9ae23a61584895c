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

#ifndef TABADV_SEARCH_HPP_
#define TABADV_SEARCH_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>

#include "json.hpp"
#include "tabadv/cost_model.hpp"
#include "tabadv/domain.hpp"
#include "tabadv/models.hpp"

namespace tabadv {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr std::size_t kUnboundedBeam = 0;

enum class ScoringKind {
  kUniversalGreedy,
  kAStar,
  kPotentialSearch,
  kBasicGreedy,
  kUniformCost,
};

struct Scoring {
  ScoringKind kind = ScoringKind::kUniversalGreedy;
  double greediness = 1.0;  // A* only

  static Scoring parse(const std::string& name);
  std::string name() const;
};

enum class BudgetMode { kCostBounded, kUtilityBounded, kMinCost, kMaxUtility };

std::string budget_mode_name(BudgetMode m);
BudgetMode parse_budget_mode(const std::string& name);

struct SearchConfig {
  std::size_t beam = 1;  // kUnboundedBeam for no bound
  double epsilon = kInfinity;
  std::size_t max_iterations = 100000;
  // Return the best-utility goal within budget instead of the first goal.
  bool maximize_utility = false;
};

enum class AttackStatus { kSuccess, kNoSolution, kBudgetExhausted, kIterationCap };

std::string status_name(AttackStatus s);
AttackStatus parse_status(const std::string& name);

struct AttackOutcome {
  AttackStatus status = AttackStatus::kNoSolution;
  std::optional<Example> adversarial;
  double cost = 0.0;
  double gain = 0.0;
  double utility = 0.0;
  double epsilon = 0.0;  // effective budget
  std::uint64_t expansions = 0;
  std::uint64_t queries = 0;
  double seconds = 0.0;

  bool success() const { return status == AttackStatus::kSuccess; }
};

// Target-class confidence: 1 - f for source label 1, f for source label 0.
inline double target_confidence(double score, int source_label) {
  return source_label == 1 ? 1.0 - score : score;
}

// Negated cost-weighted gain in target-class confidence along edge v -> t.
// Lower is better.
double score_universal_greedy(double f_v, double f_t, double cost_vt,
                              int source_label);
double score_basic_greedy(double f_t, double cost_vt, int source_label);
double score_astar(double cost_so_far, double h, double greediness);
// Requires cost_so_far < epsilon and a finite epsilon.
double score_potential_search(double h, double cost_so_far, double epsilon);

// Bounded min-priority queue: lowest score pops first, earlier insertion
// wins ties, a full queue evicts its worst element (latest among equals).
template <typename T>
class BoundedPriorityQueue {
 public:
  explicit BoundedPriorityQueue(std::size_t capacity) : capacity_(capacity) {}

  // Returns false when the item was rejected or another was evicted.
  bool push(double score, T item) {
    Entry e{score, seq_++, std::move(item)};
    if (capacity_ != kUnboundedBeam && entries_.size() >= capacity_) {
      auto worst = std::prev(entries_.end());
      if (!(e < *worst)) return false;
      entries_.erase(worst);
      entries_.insert(std::move(e));
      return false;
    }
    entries_.insert(std::move(e));
    return true;
  }
  T pop() {
    auto node = entries_.extract(entries_.begin());
    return std::move(node.value().item);
  }
  double top_score() const { return entries_.begin()->score; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    double score;
    std::uint64_t seq;
    T item;
    bool operator<(const Entry& o) const {
      if (score != o.score) return score < o.score;
      return seq < o.seq;
    }
  };
  std::size_t capacity_;
  std::uint64_t seq_ = 0;
  std::set<Entry> entries_;
};

// Best-first search over the state-space graph of `x`. Goal: the oracle's
// thresholded label differs from `x.label`.
AttackOutcome best_first_search(const BlackBox& oracle, const Schema& schema,
                                const CostSpec& costs, const Example& x,
                                const Scoring& scoring,
                                const SearchConfig& config);

AttackOutcome attack_cost_bounded(const BlackBox& oracle, const Schema& schema,
                                  const CostSpec& costs, const Example& x,
                                  double epsilon, const Scoring& scoring,
                                  std::size_t beam,
                                  std::size_t max_iterations = 100000);

AttackOutcome attack_utility_bounded(const BlackBox& oracle,
                                     const Schema& schema,
                                     const CostSpec& costs, const Example& x,
                                     double tau, const Scoring& scoring,
                                     std::size_t beam,
                                     std::size_t max_iterations = 100000);

// Uniform-cost search with unbounded beam: exact minimum-cost goal.
AttackOutcome attack_min_cost(const BlackBox& oracle, const Schema& schema,
                              const CostSpec& costs, const Example& x,
                              std::size_t max_iterations = 100000);

AttackOutcome attack_max_utility(const BlackBox& oracle, const Schema& schema,
                                 const CostSpec& costs, const Example& x,
                                 double epsilon, const Scoring& scoring,
                                 std::size_t beam,
                                 std::size_t max_iterations = 100000);

// One attack of the grid. `budget` is epsilon (cb, maxutil) or tau (ub);
// ignored for mincost.
struct AttackSpec {
  BudgetMode mode = BudgetMode::kCostBounded;
  double budget = kInfinity;
  Scoring scoring;
  std::size_t beam = 1;
  std::size_t max_iterations = 100000;

  std::string label() const;
};

void validate_attack_spec(const AttackSpec& spec);

AttackOutcome run_attack(const BlackBox& oracle, const Schema& schema,
                         const CostSpec& costs, const Example& x,
                         const AttackSpec& spec);

// One JSON-lines record (without the model / adversarial-example fields the
// harness adds).
nlohmann::json outcome_record(const AttackOutcome& outcome,
                              const AttackSpec& spec, std::size_t example_id);

}  // namespace tabadv

#endif  // TABADV_SEARCH_HPP_
