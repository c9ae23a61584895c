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

#include "tabadv/search.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace tabadv {

using nlohmann::json;

Scoring Scoring::parse(const std::string& name) {
  Scoring s;
  if (name == "ug") {
    s.kind = ScoringKind::kUniversalGreedy;
  } else if (name == "astar") {
    s.kind = ScoringKind::kAStar;
  } else if (name.rfind("astar:", 0) == 0) {
    s.kind = ScoringKind::kAStar;
    try {
      s.greediness = std::stod(name.substr(6));
    } catch (const std::exception&) {
      throw ValidationError("invalid A* greediness in '" + name + "'");
    }
    if (!(s.greediness > 0.0)) {
      throw ValidationError("A* greediness must be positive");
    }
  } else if (name == "ps") {
    s.kind = ScoringKind::kPotentialSearch;
  } else if (name == "greedy") {
    s.kind = ScoringKind::kBasicGreedy;
  } else if (name == "ucs") {
    s.kind = ScoringKind::kUniformCost;
  } else {
    throw ValidationError("unknown scoring '" + name + "'");
  }
  return s;
}

std::string Scoring::name() const {
  switch (kind) {
    case ScoringKind::kUniversalGreedy:
      return "ug";
    case ScoringKind::kAStar:
      if (greediness == 1.0) return "astar";
      {
        std::ostringstream os;
        os << "astar:" << greediness;
        return os.str();
      }
    case ScoringKind::kPotentialSearch:
      return "ps";
    case ScoringKind::kBasicGreedy:
      return "greedy";
    case ScoringKind::kUniformCost:
      return "ucs";
  }
  return "ug";
}

std::string budget_mode_name(BudgetMode m) {
  switch (m) {
    case BudgetMode::kCostBounded:
      return "cb";
    case BudgetMode::kUtilityBounded:
      return "ub";
    case BudgetMode::kMinCost:
      return "mincost";
    case BudgetMode::kMaxUtility:
      return "maxutil";
  }
  return "cb";
}

BudgetMode parse_budget_mode(const std::string& name) {
  if (name == "cb") return BudgetMode::kCostBounded;
  if (name == "ub") return BudgetMode::kUtilityBounded;
  if (name == "mincost") return BudgetMode::kMinCost;
  if (name == "maxutil") return BudgetMode::kMaxUtility;
  throw ValidationError("unknown attack mode '" + name + "'");
}

std::string status_name(AttackStatus s) {
  switch (s) {
    case AttackStatus::kSuccess:
      return "success";
    case AttackStatus::kNoSolution:
      return "no_solution";
    case AttackStatus::kBudgetExhausted:
      return "budget_exhausted";
    case AttackStatus::kIterationCap:
      return "iteration_cap";
  }
  return "no_solution";
}

AttackStatus parse_status(const std::string& name) {
  if (name == "success") return AttackStatus::kSuccess;
  if (name == "no_solution") return AttackStatus::kNoSolution;
  if (name == "budget_exhausted") return AttackStatus::kBudgetExhausted;
  if (name == "iteration_cap") return AttackStatus::kIterationCap;
  throw ValidationError("unknown attack status '" + name + "'");
}

double score_universal_greedy(double f_v, double f_t, double cost_vt,
                              int source_label) {
  const double gain_in_confidence = target_confidence(f_t, source_label) -
                                    target_confidence(f_v, source_label);
  return -gain_in_confidence / cost_vt;
}

double score_basic_greedy(double f_t, double cost_vt, int source_label) {
  return -target_confidence(f_t, source_label) / cost_vt;
}

double score_astar(double cost_so_far, double h, double greediness) {
  return cost_so_far + greediness * h;
}

double score_potential_search(double h, double cost_so_far, double epsilon) {
  if (!std::isfinite(epsilon)) {
    throw std::invalid_argument("potential search needs a finite epsilon");
  }
  const double room = epsilon - cost_so_far;
  if (!(room > 0.0)) return kInfinity;
  return h / room;
}

namespace {

struct OpenNode {
  Example example;
  double cost;
};

double outcome_gain(const Schema& schema, const Example& x,
                    const Example& adversarial) {
  return schema.gain.mode == GainMode::kVariable ? gain(schema, adversarial)
                                                 : gain(schema, x);
}

}  // namespace

AttackOutcome best_first_search(const BlackBox& oracle, const Schema& schema,
                                const CostSpec& costs, const Example& x,
                                const Scoring& scoring,
                                const SearchConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  if (!(config.epsilon >= 0.0)) {
    throw std::invalid_argument("epsilon must be >= 0");
  }
  if (config.max_iterations == 0) {
    throw std::invalid_argument("iteration cap must be >= 1");
  }
  if (scoring.kind == ScoringKind::kPotentialSearch &&
      !std::isfinite(config.epsilon)) {
    throw std::invalid_argument("potential search needs a finite epsilon");
  }
  if (scoring.kind == ScoringKind::kAStar && !(scoring.greediness > 0.0)) {
    throw std::invalid_argument("A* greediness must be positive");
  }

  const std::uint64_t queries_before = oracle.queries();
  const int source = x.label;
  const int target = 1 - source;

  std::unordered_map<Example, double, ExampleHash> scores;
  auto score_of = [&](const Example& e) {
    auto it = scores.find(e);
    if (it != scores.end()) return it->second;
    const double s = oracle.predict_score(e);
    scores.emplace(e, s);
    return s;
  };

  AttackOutcome out;
  out.epsilon = config.epsilon;
  std::optional<Example> best;
  double best_utility = -kInfinity;
  bool pruned = false;
  bool capped = false;

  BoundedPriorityQueue<OpenNode> open(config.beam);
  std::unordered_set<Example, ExampleHash> closed;
  open.push(0.0, OpenNode{x, 0.0});
  while (!open.empty()) {
    OpenNode v = open.pop();
    if (!closed.insert(v.example).second) continue;
    const double f_v = score_of(v.example);
    const int label = f_v > 0.5 ? 1 : 0;
    if (label == target) {
      if (!config.maximize_utility) {
        best = v.example;
        break;
      }
      const double u = outcome_gain(schema, x, v.example) - v.cost;
      if (u > best_utility) {
        best_utility = u;
        best = v.example;
      }
    }
    if (out.expansions >= config.max_iterations) {
      capped = true;
      break;
    }
    ++out.expansions;
    for_each_edit(schema, v.example, [&](std::size_t i, std::uint32_t code) {
      Example t = v.example;
      t.codes[i] = code;
      if (closed.count(t)) return;
      const double c_t = total_cost(schema, costs, x, t);
      if (c_t > config.epsilon) {
        pruned = true;
        return;
      }
      double s = 0.0;
      switch (scoring.kind) {
        case ScoringKind::kUniformCost:
          s = c_t;
          break;
        case ScoringKind::kUniversalGreedy:
          s = score_universal_greedy(
              f_v, score_of(t),
              feature_cost(schema, costs, i, v.example.codes[i], code), source);
          break;
        case ScoringKind::kBasicGreedy:
          s = score_basic_greedy(
              score_of(t),
              feature_cost(schema, costs, i, v.example.codes[i], code), source);
          break;
        case ScoringKind::kAStar:
          s = score_astar(c_t, 1.0 - target_confidence(score_of(t), source),
                          scoring.greediness);
          break;
        case ScoringKind::kPotentialSearch:
          s = score_potential_search(
              1.0 - target_confidence(score_of(t), source), c_t,
              config.epsilon);
          break;
      }
      open.push(s, OpenNode{std::move(t), c_t});
    });
  }

  if (best) {
    out.status = AttackStatus::kSuccess;
    out.cost = total_cost(schema, costs, x, *best);
    out.gain = outcome_gain(schema, x, *best);
    out.utility = utility(out.gain, out.cost);
    best->label = x.label;
    out.adversarial = std::move(best);
  } else {
    out.status = capped   ? AttackStatus::kIterationCap
                 : pruned ? AttackStatus::kBudgetExhausted
                          : AttackStatus::kNoSolution;
    out.gain = gain(schema, x);
  }
  out.queries = oracle.queries() - queries_before;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              started)
                    .count();
  return out;
}

AttackOutcome attack_cost_bounded(const BlackBox& oracle, const Schema& schema,
                                  const CostSpec& costs, const Example& x,
                                  double epsilon, const Scoring& scoring,
                                  std::size_t beam,
                                  std::size_t max_iterations) {
  SearchConfig cfg;
  cfg.beam = beam;
  cfg.epsilon = epsilon;
  cfg.max_iterations = max_iterations;
  return best_first_search(oracle, schema, costs, x, scoring, cfg);
}

AttackOutcome attack_utility_bounded(const BlackBox& oracle,
                                     const Schema& schema,
                                     const CostSpec& costs, const Example& x,
                                     double tau, const Scoring& scoring,
                                     std::size_t beam,
                                     std::size_t max_iterations) {
  if (!(tau >= 0.0)) throw std::invalid_argument("tau must be >= 0");
  const double epsilon = cost_bound_for_margin(gain(schema, x), tau);
  return attack_cost_bounded(oracle, schema, costs, x, epsilon, scoring, beam,
                             max_iterations);
}

AttackOutcome attack_min_cost(const BlackBox& oracle, const Schema& schema,
                              const CostSpec& costs, const Example& x,
                              std::size_t max_iterations) {
  SearchConfig cfg;
  cfg.beam = kUnboundedBeam;
  cfg.epsilon = kInfinity;
  cfg.max_iterations = max_iterations;
  return best_first_search(oracle, schema, costs, x,
                           Scoring{ScoringKind::kUniformCost, 1.0}, cfg);
}

AttackOutcome attack_max_utility(const BlackBox& oracle, const Schema& schema,
                                 const CostSpec& costs, const Example& x,
                                 double epsilon, const Scoring& scoring,
                                 std::size_t beam,
                                 std::size_t max_iterations) {
  if (!std::isfinite(epsilon)) {
    throw std::invalid_argument("utility maximization needs a finite epsilon");
  }
  SearchConfig cfg;
  cfg.beam = beam;
  cfg.epsilon = epsilon;
  cfg.max_iterations = max_iterations;
  cfg.maximize_utility = true;
  return best_first_search(oracle, schema, costs, x, scoring, cfg);
}

std::string AttackSpec::label() const {
  std::ostringstream os;
  os << budget_mode_name(mode);
  if (mode != BudgetMode::kMinCost) os << ':' << budget;
  os << '/' << (mode == BudgetMode::kMinCost ? "ucs" : scoring.name()) << "/B=";
  if (beam == kUnboundedBeam) {
    os << "inf";
  } else {
    os << beam;
  }
  return os.str();
}

void validate_attack_spec(const AttackSpec& spec) {
  if (spec.max_iterations == 0) {
    throw ValidationError("iteration cap must be >= 1");
  }
  if (spec.mode == BudgetMode::kMinCost) return;
  if (!(spec.budget >= 0.0)) {
    throw ValidationError(std::string(spec.mode == BudgetMode::kUtilityBounded
                                          ? "tau"
                                          : "epsilon") +
                          " must be >= 0");
  }
  if (spec.mode == BudgetMode::kMaxUtility && !std::isfinite(spec.budget)) {
    throw ValidationError("maxutil needs a finite epsilon");
  }
  if (spec.mode == BudgetMode::kUtilityBounded && !std::isfinite(spec.budget)) {
    throw ValidationError("tau must be finite");
  }
  if (spec.scoring.kind == ScoringKind::kPotentialSearch &&
      spec.mode == BudgetMode::kCostBounded && !std::isfinite(spec.budget)) {
    throw ValidationError("potential search is undefined for epsilon = inf");
  }
}

AttackOutcome run_attack(const BlackBox& oracle, const Schema& schema,
                         const CostSpec& costs, const Example& x,
                         const AttackSpec& spec) {
  switch (spec.mode) {
    case BudgetMode::kCostBounded:
      return attack_cost_bounded(oracle, schema, costs, x, spec.budget,
                                 spec.scoring, spec.beam, spec.max_iterations);
    case BudgetMode::kUtilityBounded:
      return attack_utility_bounded(oracle, schema, costs, x, spec.budget,
                                    spec.scoring, spec.beam,
                                    spec.max_iterations);
    case BudgetMode::kMinCost:
      return attack_min_cost(oracle, schema, costs, x, spec.max_iterations);
    case BudgetMode::kMaxUtility:
      return attack_max_utility(oracle, schema, costs, x, spec.budget,
                                spec.scoring, spec.beam, spec.max_iterations);
  }
  throw std::logic_error("unreachable");
}

namespace {

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

json outcome_record(const AttackOutcome& outcome, const AttackSpec& spec,
                    std::size_t example_id) {
  json beam = spec.beam == kUnboundedBeam ? json("inf") : json(spec.beam);
  if (spec.mode == BudgetMode::kMinCost) beam = "inf";
  return {{"example_id", example_id},
          {"status", status_name(outcome.status)},
          {"cost", outcome.cost},
          {"gain", outcome.gain},
          {"utility", outcome.utility},
          {"expansions", outcome.expansions},
          {"queries", outcome.queries},
          {"seconds", outcome.seconds},
          {"budget_mode", budget_mode_name(spec.mode)},
          {"epsilon_or_tau", spec.mode == BudgetMode::kMinCost
                                 ? json("inf")
                                 : number_or_inf(spec.budget)},
          {"scoring", spec.mode == BudgetMode::kMinCost ? std::string("ucs")
                                                        : spec.scoring.name()},
          {"beam", beam}};
}

}  // namespace tabadv
