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

#include "tabadv/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <mutex>
#include <thread>
#include <tuple>

#include "tabadv/rng.hpp"

namespace tabadv {

using nlohmann::json;

namespace {

bool counts(const EvaluatedOutcome& e) {
  return e.initially_correct && e.outcome.status == AttackStatus::kSuccess;
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

double parse_budget(const json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf") return kInfinity;
    throw ValidationError("budget must be a number or \"inf\", got '" + s + "'");
  }
  return v.get<double>();
}

TrainHyper hyper_from_json(const json& doc, TrainHyper base) {
  base.lambda = doc.value("lambda", base.lambda);
  base.learning_rate = doc.value("learning_rate", base.learning_rate);
  base.epochs = doc.value("epochs", base.epochs);
  base.batch_size = doc.value("batch_size", base.batch_size);
  return base;
}

std::string defense_name(const ModelEntry& m) {
  if (m.robust) return "robust";
  if (!m.defense) return "none";
  return m.defense->mode == DefenseMode::kCostBounded ? "cb" : "ub";
}

double defense_budget(const ModelEntry& m) {
  if (!m.defense) return 0.0;
  return m.defense->mode == DefenseMode::kCostBounded ? m.defense->epsilon
                                                      : m.defense->tau;
}

}  // namespace

double success_rate(std::span<const EvaluatedOutcome> outcomes) {
  if (outcomes.empty()) {
    throw std::invalid_argument("success rate of an empty test set");
  }
  const auto n = std::count_if(outcomes.begin(), outcomes.end(), counts);
  return static_cast<double>(n) / static_cast<double>(outcomes.size());
}

std::optional<double> avg_adversarial_cost(
    std::span<const EvaluatedOutcome> outcomes) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : outcomes) {
    if (!counts(e)) continue;
    sum += e.outcome.cost;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::optional<double> avg_adversarial_utility(
    std::span<const EvaluatedOutcome> outcomes) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : outcomes) {
    if (!counts(e)) continue;
    sum += e.outcome.utility;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

double random_baseline(std::span<const Example> test) {
  if (test.empty()) return 0.0;
  const auto pos = std::count_if(test.begin(), test.end(),
                                 [](const Example& x) { return x.label == 1; });
  const auto majority =
      std::max<std::ptrdiff_t>(pos, static_cast<std::ptrdiff_t>(test.size()) - pos);
  return static_cast<double>(majority) / static_cast<double>(test.size());
}

Metrics compute_metrics(std::span<const EvaluatedOutcome> outcomes,
                        double accuracy) {
  Metrics m;
  m.accuracy = accuracy;
  m.attacked = outcomes.size();
  for (const auto& e : outcomes) {
    if (counts(e)) ++m.successes;
    m.query_total += e.outcome.queries;
    m.seconds += e.outcome.seconds;
  }
  if (!outcomes.empty()) m.success_rate = success_rate(outcomes);
  m.avg_cost = avg_adversarial_cost(outcomes);
  m.avg_utility = avg_adversarial_utility(outcomes);
  if (m.seconds > 0.0) m.success_time_ratio = 100.0 * m.success_rate / m.seconds;
  return m;
}

std::string GridAttack::label() const {
  if (!pgd) return search.label();
  std::ostringstream os;
  os << "cb:" << search.budget << "/pgd/steps=" << pgd_steps;
  return os.str();
}

std::vector<EvaluatedOutcome> evaluate_attack(const ModelParams& model,
                                              const Encoder& encoder,
                                              std::span<const Example> examples,
                                              const GridAttack& attack,
                                              unsigned threads) {
  if (attack.pgd) {
    if (attack.search.mode != BudgetMode::kCostBounded) {
      throw ValidationError("the PGD baseline supports cost-bounded attacks only");
    }
    if (!std::isfinite(attack.search.budget)) {
      throw ValidationError("the PGD baseline needs a finite epsilon");
    }
  } else {
    validate_attack_spec(attack.search);
  }
  std::vector<EvaluatedOutcome> out(examples.size());
  auto work = [&](std::size_t i) {
    const Example& x = examples[i];
    EvaluatedOutcome& e = out[i];
    e.example_id = i;
    e.initial = x;
    e.initially_correct = predict_label(model, encoder.encode(x)) == x.label;
    if (attack.pgd) {
      e.outcome = pgd_attack_baseline(model, encoder, x, attack.search.budget,
                                      attack.pgd_steps)
                      .outcome;
    } else {
      const auto oracle = wrap_blackbox(model, encoder);
      e.outcome = run_attack(*oracle, encoder.schema(), encoder.costs(), x,
                             attack.search);
    }
  };
  unsigned n_threads = threads;
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(
      std::min<std::size_t>(n_threads, std::max<std::size_t>(examples.size(), 1)));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < examples.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < examples.size(); i = next++) {
        try {
          work(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

CostSpec masked_costs(const Schema& masked, const CostSpec& original) {
  CostSpec c = original;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    const FeatureSpec& f = masked.features[i];
    if (!f.categorical() || f.categories.size() == c.categorical[i].k) continue;
    CategoricalCost& cc = c.categorical[i];
    const std::size_t k = f.categories.size();
    CategoricalCost grown{std::vector<double>(k * k, 1.0), k};
    for (std::size_t a = 0; a < k; ++a) grown.table[a * k + a] = 0.0;
    for (std::size_t a = 0; a < cc.k; ++a) {
      for (std::size_t b = 0; b < cc.k; ++b) {
        grown.table[a * k + b] = cc.table[a * cc.k + b];
      }
    }
    cc = std::move(grown);
  }
  return c;
}

ModelParams train_robust_baseline(const Dataset& data, const Encoder& encoder,
                                  const ArchSpec& arch,
                                  const TrainHyper& hyper) {
  const Dataset masked = mask_mutable(data);
  const Encoder masked_encoder(masked.schema,
                               masked_costs(masked.schema, encoder.costs()));
  const ModelParams trained = train(masked, masked_encoder, arch, hyper);

  // Every masked row shares the same mutable coordinates; fold their
  // contribution into the first-layer bias.
  const Example probe = masked.rows.front();
  const EncodedVector mv = masked_encoder.encode(probe);
  const Schema& schema = encoder.schema();
  const auto d = static_cast<Eigen::Index>(encoder.dim());

  ModelParams lifted = trained;
  const Layer& first = trained.layers.front();
  Layer& lf = lifted.layers.front();
  lf.weight = Eigen::MatrixXd::Zero(first.weight.rows(), d);
  lf.bias = first.bias;
  lifted.input_shift = Eigen::VectorXd::Zero(d);
  lifted.input_scale = Eigen::VectorXd::Ones(d);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const FeatureSpan& so = encoder.span(i);
    const FeatureSpan& sm = masked_encoder.span(i);
    if (schema.features[i].is_mutable) {
      for (std::size_t k = 0; k < sm.width; ++k) {
        const auto j = static_cast<Eigen::Index>(sm.offset + k);
        const double z =
            (mv[sm.offset + k] - trained.input_shift[j]) * trained.input_scale[j];
        lf.bias += first.weight.col(j) * z;
      }
      continue;
    }
    for (std::size_t k = 0; k < so.width; ++k) {
      const auto jo = static_cast<Eigen::Index>(so.offset + k);
      const auto jm = static_cast<Eigen::Index>(sm.offset + k);
      lf.weight.col(jo) = first.weight.col(jm);
      lifted.input_shift[jo] = trained.input_shift[jm];
      lifted.input_scale[jo] = trained.input_scale[jm];
    }
  }
  lifted.metadata["robust_baseline"] = true;
  return lifted;
}

ExperimentConfig ExperimentConfig::from_json(const json& doc,
                                             const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  try {
    cfg.seed = doc.value("seed", std::uint64_t{0});
    const json& data = doc.at("data");
    if (data.contains("synthetic")) {
      cfg.synthetic = SyntheticConfig::from_json(data.at("synthetic"));
    } else {
      cfg.schema_path = resolve(data.at("schema").get<std::string>());
      cfg.csv_path = resolve(data.at("csv").get<std::string>());
    }
    cfg.train_fraction = doc.value("train_fraction", cfg.train_fraction);
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
      throw ValidationError("train_fraction must lie in (0, 1)");
    }
    cfg.source_label = doc.value("source_label", cfg.source_label);
    if (cfg.source_label != 0 && cfg.source_label != 1 && cfg.source_label != -1) {
      throw ValidationError("source_label must be 0, 1 or -1 (both classes)");
    }
    cfg.max_attack_examples =
        doc.value("max_attack_examples", cfg.max_attack_examples);
    cfg.threads = doc.value("threads", cfg.threads);

    const TrainHyper base =
        hyper_from_json(doc.value("train", json::object()), TrainHyper{});
    for (const json& m : doc.value("models", json::array())) {
      ModelEntry e;
      e.name = m.at("name").get<std::string>();
      e.arch = ArchSpec::parse(m.value("arch", std::string("lr")));
      e.hyper = hyper_from_json(m, base);
      if (m.contains("defense")) e.defense = AdvTrainConfig::from_json(m.at("defense"));
      e.robust = m.value("robust", false);
      if (e.robust && e.defense) {
        throw ValidationError("model '" + e.name +
                              "': robust baseline cannot also be defended");
      }
      cfg.models.push_back(std::move(e));
    }
    if (doc.contains("defense_grid")) {
      const json& g = doc.at("defense_grid");
      const ArchSpec arch = ArchSpec::parse(g.value("arch", std::string("lr")));
      const std::size_t steps = g.value("pgd_steps", std::size_t{20});
      for (const json& v : g.value("cb_epsilons", json::array())) {
        ModelEntry e;
        e.arch = arch;
        e.hyper = base;
        e.defense = AdvTrainConfig{DefenseMode::kCostBounded, v.get<double>(),
                                   0.0, steps};
        e.name = "cb_" + arch.to_string() + "_eps=" + fmt(e.defense->epsilon);
        cfg.models.push_back(std::move(e));
      }
      for (const json& v : g.value("ub_taus", json::array())) {
        ModelEntry e;
        e.arch = arch;
        e.hyper = base;
        e.defense = AdvTrainConfig{DefenseMode::kUtilityBounded, 0.0,
                                   v.get<double>(), steps};
        e.name = "ub_" + arch.to_string() + "_tau=" + fmt(e.defense->tau);
        cfg.models.push_back(std::move(e));
      }
    }
    if (doc.contains("robust_baseline")) {
      const json& r = doc.at("robust_baseline");
      if (!r.is_boolean() || r.get<bool>()) {
        ModelEntry e;
        e.arch = ArchSpec::parse(r.is_object() ? r.value("arch", std::string("lr"))
                                               : std::string("lr"));
        e.hyper = base;
        e.robust = true;
        e.name = "robust_" + e.arch.to_string();
        cfg.models.push_back(std::move(e));
      }
    }

    for (const json& a : doc.at("attacks")) {
      const BudgetMode mode =
          parse_budget_mode(a.value("mode", std::string("cb")));
      std::vector<double> budgets;
      if (a.contains("budgets")) {
        for (const json& b : a.at("budgets")) budgets.push_back(parse_budget(b));
      } else if (mode == BudgetMode::kMinCost) {
        budgets.push_back(kInfinity);
      }
      const json scorings =
          a.value("scorings", json::array({mode == BudgetMode::kMinCost ? "ucs" : "ug"}));
      const json beams = a.value("beams", json::array({1}));
      const std::size_t cap = a.value("max_iterations", std::size_t{100000});
      const std::size_t steps = a.value("pgd_steps", std::size_t{20});
      if (budgets.empty() || scorings.empty() || beams.empty()) {
        throw ValidationError("attack grid entries need non-empty budgets, "
                              "scorings and beams");
      }
      for (double b : budgets) {
        for (const json& s : scorings) {
          const std::string sname = s.get<std::string>();
          if (sname == "pgd") {
            GridAttack g;
            g.pgd = true;
            g.pgd_steps = steps;
            g.search.mode = mode;
            g.search.budget = b;
            cfg.attacks.push_back(g);
            continue;
          }
          for (const json& beam : beams) {
            GridAttack g;
            g.search.mode = mode;
            g.search.budget = b;
            g.search.scoring = Scoring::parse(sname);
            g.search.beam = beam.is_string() && beam.get<std::string>() == "inf"
                                ? kUnboundedBeam
                                : beam.get<std::size_t>();
            g.search.max_iterations = cap;
            if (mode == BudgetMode::kMinCost) g.search.beam = kUnboundedBeam;
            cfg.attacks.push_back(g);
          }
        }
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("experiment config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("experiment config: ") + e.what());
  }
  if (cfg.models.empty()) throw ValidationError("experiment config: no models");
  if (cfg.attacks.empty()) throw ValidationError("experiment config: no attacks");
  for (const GridAttack& g : cfg.attacks) {
    if (g.pgd) {
      if (g.search.mode != BudgetMode::kCostBounded || !std::isfinite(g.search.budget)) {
        throw ValidationError(
            "experiment config: pgd attacks need mode cb and finite budgets");
      }
    } else {
      validate_attack_spec(g.search);
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

json evaluated_record(const Schema& schema, const EvaluatedOutcome& e,
                      const GridAttack& attack, const std::string& model_name) {
  json rec = outcome_record(e.outcome, attack.search, e.example_id);
  if (attack.pgd) {
    rec["scoring"] = "pgd";
    rec["beam"] = nullptr;
  }
  rec["model"] = model_name;
  rec["attack"] = attack.label();
  rec["label"] = e.initial.label;
  rec["initially_correct"] = e.initially_correct;
  json initial = json::object();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    initial[schema.features[i].name] = value_string(schema, e.initial, i);
  }
  rec["initial"] = std::move(initial);
  if (e.outcome.adversarial) {
    json adv = json::object();
    for (std::size_t i = 0; i < schema.size(); ++i) {
      adv[schema.features[i].name] = value_string(schema, *e.outcome.adversarial, i);
    }
    rec["adversarial"] = std::move(adv);
  } else {
    rec["adversarial"] = nullptr;
  }
  return rec;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.models.empty() || cfg.attacks.empty()) {
    throw ValidationError("experiment needs at least one model and one attack");
  }
  Dataset data;
  CostSpec costs;
  if (cfg.synthetic) {
    data = generate_synthetic(*cfg.synthetic, cfg.seed);
    costs = synthetic_costs(data.schema);
  } else {
    const Schema schema = load_schema(cfg.schema_path);
    costs = load_cost_spec(schema, cfg.schema_path);
    data = load_dataset(schema, cfg.csv_path);
  }
  auto [train_set, test_set] =
      split_dataset(data, cfg.train_fraction, derive_seed(cfg.seed, 1));
  if (test_set.rows.empty()) throw ValidationError("empty test split");
  const Encoder encoder(data.schema, costs);

  std::vector<Example> targets;
  for (const Example& x : test_set.rows) {
    if (cfg.source_label >= 0 && x.label != cfg.source_label) continue;
    if (targets.size() >= cfg.max_attack_examples) break;
    targets.push_back(x);
  }
  if (targets.empty()) throw ValidationError("no test examples to attack");

  ExperimentReport report;
  report.schema = data.schema;
  report.costs = costs;
  report.random_baseline_accuracy = random_baseline(test_set.rows);

  const Eigen::MatrixXd test_x = encode_rows(encoder, test_set.rows);
  const std::vector<int> test_y = labels_of(test_set.rows);
  const std::uint64_t train_seed = derive_seed(cfg.seed, 2);

  for (const ModelEntry& entry : cfg.models) {
    TrainHyper hyper = entry.hyper;
    hyper.seed = train_seed;
    ModelParams model;
    try {
      if (entry.robust) {
        model = train_robust_baseline(train_set, encoder, entry.arch, hyper);
      } else if (entry.defense) {
        model = adv_train(train_set, encoder, entry.arch, *entry.defense, hyper);
      } else {
        model = train(train_set, encoder, entry.arch, hyper);
      }
    } catch (const ValidationError& e) {
      throw ValidationError("model '" + entry.name + "': " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("model '" + entry.name + "': " + e.what());
    }
    const double acc = accuracy(model, test_x, test_y);
    for (const GridAttack& attack : cfg.attacks) {
      std::vector<EvaluatedOutcome> outcomes;
      try {
        outcomes = evaluate_attack(model, encoder, targets, attack, cfg.threads);
      } catch (const ValidationError& e) {
        throw ValidationError("cell (" + entry.name + ", " + attack.label() +
                              "): " + e.what());
      } catch (const std::exception& e) {
        throw std::runtime_error("cell (" + entry.name + ", " + attack.label() +
                                 "): " + e.what());
      }
      CellReport cell;
      cell.model = entry.name;
      cell.attack = attack.label();
      cell.defense = defense_name(entry);
      cell.defense_budget = defense_budget(entry);
      cell.metrics = compute_metrics(outcomes, acc);
      report.cells.push_back(std::move(cell));
      for (const auto& e : outcomes) {
        report.outcomes.push_back(
            evaluated_record(data.schema, e, attack, entry.name));
      }
    }
  }
  return report;
}

void write_report(const ExperimentReport& report,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream metrics;
  metrics << "model,defense,defense_budget,attack,accuracy,success_rate,"
             "avg_cost,avg_utility,success_time_ratio,query_total,attacked,"
             "successes,seconds\n";
  std::ostringstream tradeoff;
  tradeoff << "model,defense,defense_budget,attack,accuracy,success_rate,"
              "avg_utility\n";
  for (const CellReport& c : report.cells) {
    const Metrics& m = c.metrics;
    metrics << c.model << ',' << c.defense << ',' << fmt(c.defense_budget) << ','
            << c.attack << ',' << fmt(m.accuracy) << ',' << fmt(m.success_rate)
            << ',' << fmt_opt(m.avg_cost) << ',' << fmt_opt(m.avg_utility) << ','
            << fmt(m.success_time_ratio) << ',' << m.query_total << ','
            << m.attacked << ',' << m.successes << ',' << fmt(m.seconds) << '\n';
    tradeoff << c.model << ',' << c.defense << ',' << fmt(c.defense_budget) << ','
             << c.attack << ',' << fmt(m.accuracy) << ',' << fmt(m.success_rate)
             << ',' << fmt_opt(m.avg_utility) << '\n';
  }
  write_text(dir / "metrics.csv", metrics.str());
  write_text(dir / "tradeoff.csv", tradeoff.str());
  std::ostringstream lines;
  for (const json& r : report.outcomes) lines << r.dump() << '\n';
  write_text(dir / "outcomes.jsonl", lines.str());
  json doc = schema_document(report.schema, report.costs);
  write_text(dir / "schema.json", doc.dump(2) + "\n");
  write_text(dir / "baselines.json",
             json{{"random_baseline_accuracy", report.random_baseline_accuracy}}
                     .dump(2) +
                 "\n");
}

namespace {

std::optional<Example> example_from_values(const Schema& schema, const json& values,
                                           std::string& error) {
  if (!values.is_object()) {
    error = "example is not an object";
    return std::nullopt;
  }
  Example x;
  x.codes.resize(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const FeatureSpec& f = schema.features[i];
    if (!values.contains(f.name) || !values.at(f.name).is_string()) {
      error = "missing value for '" + f.name + "'";
      return std::nullopt;
    }
    const std::string v = values.at(f.name).get<std::string>();
    if (f.categorical()) {
      auto it = std::find(f.categories.begin(), f.categories.end(), v);
      if (it == f.categories.end()) {
        error = "unknown category '" + v + "' for '" + f.name + "'";
        return std::nullopt;
      }
      x.codes[i] = static_cast<std::uint32_t>(it - f.categories.begin());
    } else {
      double d = 0.0;
      std::istringstream is(v);
      if (!(is >> d)) {
        error = "non-numeric value '" + v + "' for '" + f.name + "'";
        return std::nullopt;
      }
      auto it = std::find(f.grid.begin(), f.grid.end(), d);
      if (it == f.grid.end()) {
        error = "value " + v + " of '" + f.name + "' is not a grid point";
        return std::nullopt;
      }
      x.codes[i] = static_cast<std::uint32_t>(it - f.grid.begin());
    }
  }
  return x;
}

bool close(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol;
}

struct CellTally {
  std::size_t attacked = 0;
  std::size_t successes = 0;
  double cost_sum = 0.0;
  double utility_sum = 0.0;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> parse_field(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "inf") return kInfinity;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError("malformed number '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<std::string> audit_report(const std::filesystem::path& dir,
                                      double tolerance) {
  std::vector<std::string> problems;
  const json schema_doc = json::parse(read_text(dir / "schema.json"));
  const Schema schema = parse_schema(schema_doc);
  const CostSpec costs = parse_cost_spec(schema, schema_doc);

  std::map<std::pair<std::string, std::string>, CellTally> tallies;
  std::istringstream lines(read_text(dir / "outcomes.jsonl"));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = "outcomes.jsonl:" + std::to_string(lineno);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      problems.push_back(where + ": unparsable record");
      continue;
    }
    try {
      const auto key = std::make_pair(rec.at("model").get<std::string>(),
                                      rec.at("attack").get<std::string>());
      CellTally& t = tallies[key];
      ++t.attacked;
      const bool success = rec.at("status").get<std::string>() == "success";
      if (!success) {
        if (!rec.at("adversarial").is_null()) {
          problems.push_back(where + ": failed attack stores an adversarial example");
        }
        continue;
      }
      std::string err;
      const auto x = example_from_values(schema, rec.at("initial"), err);
      if (!x) {
        problems.push_back(where + ": initial example: " + err);
        continue;
      }
      const auto adv = example_from_values(schema, rec.at("adversarial"), err);
      if (!adv) {
        problems.push_back(where + ": adversarial example: " + err);
        continue;
      }
      const double cost = total_cost(schema, costs, *x, *adv);
      const double g = schema.gain.mode == GainMode::kVariable ? gain(schema, *adv)
                                                               : gain(schema, *x);
      const double u = utility(g, cost);
      if (!close(cost, rec.at("cost").get<double>(), tolerance)) {
        problems.push_back(where + ": stored cost " + fmt(rec.at("cost").get<double>()) +
                           " != recomputed " + fmt(cost));
      }
      if (!close(u, rec.at("utility").get<double>(), tolerance)) {
        problems.push_back(where + ": stored utility " +
                           fmt(rec.at("utility").get<double>()) +
                           " != recomputed " + fmt(u));
      }
      const std::string mode = rec.at("budget_mode").get<std::string>();
      const json& b = rec.at("epsilon_or_tau");
      const double budget = parse_budget(b);
      if ((mode == "cb" || mode == "maxutil") && cost > budget + tolerance) {
        problems.push_back(where + ": cost " + fmt(cost) + " exceeds epsilon " +
                           fmt(budget));
      }
      if (mode == "ub" && cost > cost_bound_for_margin(gain(schema, *x), budget) +
                                     tolerance) {
        problems.push_back(where + ": cost " + fmt(cost) +
                           " exceeds the utility margin budget");
      }
      if (rec.at("initially_correct").get<bool>()) {
        ++t.successes;
        t.cost_sum += cost;
        t.utility_sum += u;
      }
    } catch (const std::exception& e) {
      problems.push_back(where + ": " + e.what());
    }
  }

  std::istringstream metrics(read_text(dir / "metrics.csv"));
  std::getline(metrics, line);
  std::size_t rows = 0;
  lineno = 1;
  while (std::getline(metrics, line)) {
    ++lineno;
    if (line.empty()) continue;
    ++rows;
    const std::string where = "metrics.csv:" + std::to_string(lineno);
    const auto f = split_csv_line(line);
    if (f.size() != 13) {
      problems.push_back(where + ": expected 13 fields");
      continue;
    }
    auto it = tallies.find({f[0], f[3]});
    if (it == tallies.end()) {
      problems.push_back(where + ": no outcome records for this cell");
      continue;
    }
    const CellTally& t = it->second;
    try {
      const double rate = t.attacked == 0
                              ? 0.0
                              : static_cast<double>(t.successes) /
                                    static_cast<double>(t.attacked);
      if (!close(*parse_field(f[5]), rate, tolerance)) {
        problems.push_back(where + ": success_rate " + f[5] + " != recomputed " +
                           fmt(rate));
      }
      const auto avg_cost = parse_field(f[6]);
      const auto avg_util = parse_field(f[7]);
      if (t.successes == 0) {
        if (avg_cost || avg_util) {
          problems.push_back(where + ": averages reported without successes");
        }
      } else {
        const double n = static_cast<double>(t.successes);
        if (!avg_cost || !close(*avg_cost, t.cost_sum / n, tolerance)) {
          problems.push_back(where + ": avg_cost " + f[6] + " != recomputed " +
                             fmt(t.cost_sum / n));
        }
        if (!avg_util || !close(*avg_util, t.utility_sum / n, tolerance)) {
          problems.push_back(where + ": avg_utility " + f[7] + " != recomputed " +
                             fmt(t.utility_sum / n));
        }
      }
      if (std::stoull(f[10]) != t.attacked || std::stoull(f[11]) != t.successes) {
        problems.push_back(where + ": example counts do not match the records");
      }
    } catch (const std::exception& e) {
      problems.push_back(where + ": " + e.what());
    }
  }
  if (rows != tallies.size()) {
    problems.push_back("metrics.csv has " + std::to_string(rows) +
                       " rows for " + std::to_string(tallies.size()) +
                       " cells with outcome records");
  }
  return problems;
}

}  // namespace tabadv
