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

#include "tabadv/cli.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tabadv/adv_training.hpp"
#include "tabadv/cost_model.hpp"
#include "tabadv/domain.hpp"
#include "tabadv/harness.hpp"
#include "tabadv/models.hpp"
#include "tabadv/projection.hpp"
#include "tabadv/search.hpp"

namespace tabadv {

using nlohmann::json;

namespace {

// Raised for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_number_or_inf(const std::string& text, const char* flag) {
  if (text == "inf") return kInfinity;
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string(flag) + ": expected a number or inf, got '" +
                     text + "'");
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_file_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
};

struct DataFlags {
  std::string schema;
  std::string data;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--schema", f.schema, "Schema JSON (features, label, gain, costs)")
      ->required();
  cmd->add_option("--data", f.data, "CSV dataset")->required();
}

struct Loaded {
  Dataset data;
  CostSpec costs;
};

Loaded load_inputs(const DataFlags& f) {
  const Schema schema = load_schema(f.schema);
  CostSpec costs = load_cost_spec(schema, f.schema);
  return {load_dataset(schema, f.data), std::move(costs)};
}

void require_out(const Globals& g) {
  if (g.out.empty()) throw UsageError("--out is required");
}

struct TrainFlags {
  std::string arch = "lr";
  double lambda = TrainHyper{}.lambda;
  double lr = TrainHyper{}.learning_rate;
  std::size_t epochs = TrainHyper{}.epochs;
  std::size_t batch = TrainHyper{}.batch_size;
  std::string log;

  TrainHyper hyper(std::uint64_t seed) const {
    TrainHyper h;
    h.lambda = lambda;
    h.learning_rate = lr;
    h.epochs = epochs;
    h.batch_size = batch;
    h.seed = seed;
    return h;
  }
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--arch", f.arch, "lr, mlp or mlp:H1,H2,...")
      ->capture_default_str();
  cmd->add_option("--lambda", f.lambda, "L2 penalty on weights")
      ->capture_default_str();
  cmd->add_option("--lr", f.lr, "Learning rate")->capture_default_str();
  cmd->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch", f.batch, "Mini-batch size")->capture_default_str();
  cmd->add_option("--log", f.log, "Write per-epoch JSON lines to this file");
}

// One JSON line per epoch; a no-op callback when no path was given.
class EpochLogger {
 public:
  explicit EpochLogger(const std::string& path) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) throw std::runtime_error("cannot write " + path);
  }

  EpochCallback callback() {
    if (!file_.is_open()) return {};
    return [this](const EpochLog& e) {
      file_ << json{{"epoch", e.epoch},
                    {"clean_loss", e.clean_loss},
                    {"adv_loss", e.adv_loss},
                    {"clean_acc", e.clean_acc}}
                   .dump()
            << "\n";
      file_.flush();
    };
  }

 private:
  std::ofstream file_;
};

json metrics_json(const Metrics& m) {
  json j = {{"accuracy", m.accuracy},
            {"success_rate", m.success_rate},
            {"success_time_ratio", m.success_time_ratio},
            {"query_total", m.query_total},
            {"attacked", m.attacked},
            {"successes", m.successes}};
  j["avg_cost"] = m.avg_cost ? json(*m.avg_cost) : json(nullptr);
  j["avg_utility"] = m.avg_utility ? json(*m.avg_utility) : json(nullptr);
  return j;
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("--target: bad number '" + item + "'");
    }
  }
  return v;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Cost-aware adversarial attacks and defenses for tabular models",
               "tabadv"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")
      ->capture_default_str();
  app.add_option("--out", g.out, "Output file or directory");

  // synth
  CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic benchmark");
  std::string synth_config;
  std::size_t synth_rows = 0;
  synth->add_option("--config", synth_config, "Synthetic config JSON");
  synth->add_option("--rows", synth_rows, "Row count (overrides the config)");

  // train
  CLI::App* train_cmd = app.add_subcommand("train", "Train a target model");
  DataFlags train_data;
  TrainFlags train_flags;
  add_data_flags(train_cmd, train_data);
  add_train_flags(train_cmd, train_flags);

  // attack
  CLI::App* attack = app.add_subcommand("attack", "Attack every selected row");
  DataFlags attack_data;
  std::string attack_model;
  std::string attack_mode = "cb";
  std::string attack_eps;
  std::string attack_tau;
  std::string attack_scoring = "ug";
  std::string attack_beam = "1";
  std::size_t attack_cap = 100000;
  std::size_t attack_pgd_steps = 20;
  int attack_source = 1;
  std::size_t attack_limit = 0;
  unsigned attack_threads = 1;
  attack->add_option("--model", attack_model, "Model JSON")->required();
  add_data_flags(attack, attack_data);
  attack->add_option("--mode", attack_mode, "cb, ub, mincost or maxutil")
      ->capture_default_str()
      ->check(CLI::IsMember({"cb", "ub", "mincost", "maxutil"}));
  attack->add_option("--epsilon", attack_eps, "Cost budget (number or inf)");
  attack->add_option("--tau", attack_tau, "Utility margin (ub mode)");
  attack->add_option("--scoring", attack_scoring,
                     "ug, astar, astar:L, ps, greedy, ucs or pgd (white-box)")
      ->capture_default_str();
  attack->add_option("--beam", attack_beam, "Beam size (inf for unbounded)")
      ->capture_default_str();
  attack->add_option("--max-iterations", attack_cap, "Expansion cap per example")
      ->capture_default_str();
  attack->add_option("--pgd-steps", attack_pgd_steps, "Steps for --scoring pgd")
      ->capture_default_str();
  attack->add_option("--source-label", attack_source,
                     "Attack rows with this label (-1 for all)")
      ->capture_default_str();
  attack->add_option("--limit", attack_limit, "Attack at most this many rows (0 = all)")
      ->capture_default_str();
  attack->add_option("--threads", attack_threads, "Worker threads (0 = all cores)")
      ->capture_default_str();

  // defend
  CLI::App* defend = app.add_subcommand("defend", "Adversarially train a model");
  DataFlags defend_data;
  TrainFlags defend_flags;
  std::string defend_mode = "cb";
  double defend_eps = 0.0;
  double defend_tau = 0.0;
  std::size_t defend_steps = 20;
  add_data_flags(defend, defend_data);
  add_train_flags(defend, defend_flags);
  defend->add_option("--mode", defend_mode, "cb or ub")
      ->capture_default_str()
      ->check(CLI::IsMember({"cb", "ub"}));
  defend->add_option("--epsilon", defend_eps, "Training cost budget (cb)");
  defend->add_option("--tau", defend_tau, "Utility margin (ub)");
  defend->add_option("--pgd-steps", defend_steps, "PGD steps per batch")
      ->capture_default_str();

  // eval
  CLI::App* eval = app.add_subcommand("eval", "Run an experiment grid");
  std::string eval_config;
  std::string eval_audit;
  eval->add_option("--config", eval_config, "Experiment config JSON");
  eval->add_option("--audit", eval_audit, "Audit an existing report directory");

  // project
  CLI::App* project = app.add_subcommand(
      "project", "Project a target encoding onto a row's relaxed cost ball");
  DataFlags project_data;
  std::size_t project_row = 0;
  std::string project_target;
  double project_eps = 0.0;
  add_data_flags(project, project_data);
  project->add_option("--row", project_row, "Anchor row index")
      ->capture_default_str();
  project->add_option("--target", project_target,
                      "Comma-separated target encoding v'")
      ->required();
  project->add_option("--epsilon", project_eps, "Cost budget")->required();

  for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  // Subcommand help requested through the subcommand itself.

  try {
    if (synth->parsed()) {
      require_out(g);
      SyntheticConfig cfg;
      if (!synth_config.empty()) {
        cfg = SyntheticConfig::from_json(json::parse(read_file_text(synth_config)));
      }
      if (synth_rows > 0) cfg.rows = synth_rows;
      const Dataset data = generate_synthetic(cfg, g.seed);
      std::filesystem::create_directories(g.out);
      const std::filesystem::path dir(g.out);
      write_file((dir / "data.csv").string(), dataset_to_csv(data));
      write_file((dir / "schema.json").string(),
                 schema_document(data.schema, synthetic_costs(data.schema)).dump(2) +
                     "\n");
      out << json{{"rows", data.rows.size()},
                  {"csv", (dir / "data.csv").string()},
                  {"schema", (dir / "schema.json").string()}}
                 .dump()
          << "\n";
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      require_out(g);
      const Loaded in = load_inputs(train_data);
      const Encoder enc(in.data.schema, in.costs);
      const ArchSpec arch = ArchSpec::parse(train_flags.arch);
      EpochLogger log(train_flags.log);
      const ModelParams model =
          train(in.data, enc, arch, train_flags.hyper(g.seed), log.callback());
      save_model(model, g.out);
      const double acc = accuracy(model, encode_rows(enc, in.data.rows),
                                  labels_of(in.data.rows));
      out << json{{"model", g.out}, {"arch", arch.to_string()},
                  {"train_accuracy", acc}}
                 .dump()
          << "\n";
      return kExitOk;
    }

    if (attack->parsed()) {
      require_out(g);
      AttackSpec spec;
      spec.mode = parse_budget_mode(attack_mode);
      const bool pgd = attack_scoring == "pgd";
      if (!pgd) spec.scoring = Scoring::parse(attack_scoring);
      spec.beam = attack_beam == "inf"
                      ? kUnboundedBeam
                      : static_cast<std::size_t>(
                            parse_number_or_inf(attack_beam, "--beam"));
      spec.max_iterations = attack_cap;
      switch (spec.mode) {
        case BudgetMode::kCostBounded:
        case BudgetMode::kMaxUtility:
          if (attack_eps.empty()) throw UsageError("--epsilon is required");
          if (!attack_tau.empty()) throw UsageError("--tau needs --mode ub");
          spec.budget = parse_number_or_inf(attack_eps, "--epsilon");
          break;
        case BudgetMode::kUtilityBounded:
          if (attack_tau.empty()) throw UsageError("--tau is required");
          if (!attack_eps.empty()) throw UsageError("--epsilon conflicts with --mode ub");
          spec.budget = parse_number_or_inf(attack_tau, "--tau");
          break;
        case BudgetMode::kMinCost:
          if (!attack_eps.empty() || !attack_tau.empty()) {
            throw UsageError("--mode mincost takes no budget");
          }
          spec.beam = kUnboundedBeam;
          break;
      }
      if (!pgd && spec.scoring.kind == ScoringKind::kPotentialSearch &&
          spec.mode == BudgetMode::kCostBounded && std::isinf(spec.budget)) {
        throw UsageError("--scoring ps needs a finite --epsilon");
      }
      if (pgd && (spec.mode != BudgetMode::kCostBounded || std::isinf(spec.budget))) {
        throw UsageError("--scoring pgd needs --mode cb and a finite --epsilon");
      }
      if (attack_source < -1 || attack_source > 1) {
        throw UsageError("--source-label must be 0, 1 or -1");
      }
      if (!pgd) validate_attack_spec(spec);

      const Loaded in = load_inputs(attack_data);
      const Encoder enc(in.data.schema, in.costs);
      const ModelParams model = load_model(attack_model);
      std::vector<Example> rows;
      for (const Example& x : in.data.rows) {
        if (attack_source >= 0 && x.label != attack_source) continue;
        if (attack_limit > 0 && rows.size() >= attack_limit) break;
        rows.push_back(x);
      }
      if (rows.empty()) throw ValidationError("no rows to attack");
      GridAttack grid;
      grid.search = spec;
      grid.pgd = pgd;
      grid.pgd_steps = attack_pgd_steps;
      const auto outcomes = evaluate_attack(model, enc, rows, grid, attack_threads);
      std::ostringstream lines;
      const std::string model_name =
          std::filesystem::path(attack_model).stem().string();
      for (const auto& e : outcomes) {
        lines << evaluated_record(in.data.schema, e, grid, model_name).dump()
              << "\n";
      }
      write_file(g.out, lines.str());
      const double acc = accuracy(model, encode_rows(enc, in.data.rows),
                                  labels_of(in.data.rows));
      json summary = metrics_json(compute_metrics(outcomes, acc));
      summary["attack"] = grid.label();
      out << summary.dump() << "\n";
      return kExitOk;
    }

    if (defend->parsed()) {
      require_out(g);
      AdvTrainConfig cfg;
      cfg.pgd_steps = defend_steps;
      if (defend_mode == "cb") {
        if (defend->count("--tau") > 0) throw UsageError("--tau needs --mode ub");
        cfg.mode = DefenseMode::kCostBounded;
        cfg.epsilon = defend_eps;
      } else {
        if (defend->count("--epsilon") > 0) {
          throw UsageError("--epsilon conflicts with --mode ub");
        }
        cfg.mode = DefenseMode::kUtilityBounded;
        cfg.tau = defend_tau;
      }
      const Loaded in = load_inputs(defend_data);
      const Encoder enc(in.data.schema, in.costs);
      const ArchSpec arch = ArchSpec::parse(defend_flags.arch);
      EpochLogger log(defend_flags.log);
      const ModelParams model = adv_train(in.data, enc, arch, cfg,
                                          defend_flags.hyper(g.seed), log.callback());
      save_model(model, g.out);
      const double acc = accuracy(model, encode_rows(enc, in.data.rows),
                                  labels_of(in.data.rows));
      out << json{{"model", g.out}, {"defense", cfg.to_json()},
                  {"train_accuracy", acc}}
                 .dump()
          << "\n";
      return kExitOk;
    }

    if (eval->parsed()) {
      if (!eval_audit.empty()) {
        if (!eval_config.empty()) throw UsageError("--audit conflicts with --config");
        const auto problems = audit_report(eval_audit);
        for (const auto& p : problems) err << "audit: " << p << "\n";
        out << json{{"report", eval_audit}, {"audit_passed", problems.empty()},
                    {"problems", problems.size()}}
                   .dump()
            << "\n";
        return problems.empty() ? kExitOk : kExitAudit;
      }
      if (eval_config.empty()) throw UsageError("--config or --audit is required");
      require_out(g);
      ExperimentConfig cfg = ExperimentConfig::load(eval_config);
      if (app.count("--seed") > 0) cfg.seed = g.seed;
      const ExperimentReport report = run_experiment(cfg);
      write_report(report, g.out);
      const auto problems = audit_report(g.out);
      for (const auto& p : problems) err << "audit: " << p << "\n";
      out << json{{"report", g.out}, {"cells", report.cells.size()},
                  {"audit_passed", problems.empty()}}
                 .dump()
          << "\n";
      return problems.empty() ? kExitOk : kExitAudit;
    }

    if (project->parsed()) {
      const Loaded in = load_inputs(project_data);
      const Encoder enc(in.data.schema, in.costs);
      if (project_row >= in.data.rows.size()) {
        throw UsageError("--row out of range");
      }
      const Example& anchor = in.data.rows[project_row];
      const EncodedVector v = enc.encode(anchor);
      const std::vector<double> target = parse_vector(project_target);
      if (target.size() != v.size()) {
        throw UsageError("--target needs " + std::to_string(v.size()) +
                         " values");
      }
      const std::vector<double> delta =
          project_cost_ball(enc, anchor, v, target, project_eps);
      EncodedVector moved = v;
      for (std::size_t k = 0; k < v.size(); ++k) moved[k] += delta[k];
      json j = {{"anchor", v},
                {"delta", delta},
                {"projected", moved},
                {"relaxed_cost", enc.relaxed_cost(anchor, v, moved)}};
      const std::string text = j.dump(2) + "\n";
      if (!g.out.empty()) write_file(g.out, text);
      out << text;
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace tabadv
