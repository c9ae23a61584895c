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

#ifndef TABADV_DOMAIN_HPP_
#define TABADV_DOMAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace tabadv {

// Raised for malformed schemas, datasets, configs and cost specs. Carries
// enough context (feature, row, column) for the caller to print as-is.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FeatureKind { kCategorical, kNumeric };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kCategorical;
  // Categorical: ordered distinct symbols.
  std::vector<std::string> categories;
  // Numeric: bounds and the strictly increasing grid of attainable values.
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> grid;
  bool is_mutable = false;

  bool categorical() const { return kind == FeatureKind::kCategorical; }
  // Number of distinct codes a value of this feature can take.
  std::size_t cardinality() const {
    return categorical() ? categories.size() : grid.size();
  }
};

enum class GainMode { kConstant, kVariable };

// Where the adversary's reward comes from. Exactly one of `column` or
// `constant` is set.
struct GainSpec {
  std::optional<std::string> column;
  std::optional<double> constant;
  GainMode mode = GainMode::kConstant;
};

struct Schema {
  std::vector<FeatureSpec> features;
  std::string label;
  GainSpec gain;

  std::size_t size() const { return features.size(); }
  // Index of the named feature, or nullopt.
  std::optional<std::size_t> find(std::string_view name) const;
  bool has_mutable() const;
};

// A canonicalized record: one code per feature (category index or grid
// index). Codes double as the node identity in graph search.
struct Example {
  std::vector<std::uint32_t> codes;
  int label = 0;

  friend bool operator==(const Example& a, const Example& b) {
    return a.codes == b.codes;
  }
};

struct ExampleHash {
  std::size_t operator()(const Example& x) const noexcept;
};

struct Dataset {
  Schema schema;
  std::vector<Example> rows;
};

// Numeric value of feature `i` in `x` (grid lookup). Feature must be numeric.
double numeric_value(const Schema& schema, const Example& x, std::size_t i);
// Human-readable value of feature `i` (category symbol or formatted number).
std::string value_string(const Schema& schema, const Example& x,
                         std::size_t i);

// Throws ValidationError when a schema invariant is violated.
void validate_schema(const Schema& schema);
void validate_example(const Schema& schema, const Example& x);

Schema parse_schema(const nlohmann::json& doc);
nlohmann::json schema_to_json(const Schema& schema);
Schema load_schema(const std::filesystem::path& path);

// Parses an RFC-4180 CSV with a header row. Numeric cells are snapped to
// the nearest grid point after the bounds check.
Dataset parse_dataset(const Schema& schema, std::string_view csv_text);
Dataset load_dataset(const Schema& schema, const std::filesystem::path& path);
std::string dataset_to_csv(const Dataset& data);

// Minimal RFC-4180 reader; exposed for tests and the report auditor.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// Codes feature `i` may take starting from `x`.
std::vector<std::uint32_t> feasible_values(const Schema& schema,
                                           const Example& x, std::size_t i);

struct Neighbor {
  Example example;
  std::size_t feature;
};

// Every feasible example differing from `x` in exactly one feature, ordered
// by feature then by code.
std::vector<Neighbor> neighbors(const Schema& schema, const Example& x);

// Calls `visit(feature, code)` for every one-feature edit of `x` without
// materializing the neighbor list.
void for_each_edit(const Schema& schema, const Example& x,
                   const std::function<void(std::size_t, std::uint32_t)>& visit);

struct SyntheticConfig {
  std::size_t rows = 2000;
  // Mutable categorical features, each with this many categories.
  std::size_t mutable_categorical = 3;
  std::size_t categories_per_feature = 4;
  std::size_t mutable_numeric = 2;
  std::size_t immutable_categorical = 1;
  std::size_t immutable_numeric = 3;
  std::size_t grid_points = 20;
  // Scale of the latent logit; larger means more separable classes.
  double separation = 2.5;
  // Relative strength of the mutable features in the latent logit.
  double mutable_weight = 1.0;
  double positive_rate = 0.5;
  // Gain column range (money).
  double gain_min = 10.0;
  double gain_max = 300.0;

  void validate() const;
  static SyntheticConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

// Synthetic fraud-like benchmark. The returned schema carries an immutable
// gain column named "amount"; matching costs come from `synthetic_costs`.
Dataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Replaces every mutable feature by a sentinel: numeric features by the grid
// point nearest 0, categorical features by a reserved category appended to
// the value list. Idempotent.
Dataset mask_mutable(const Dataset& data);
Example mask_example(const Schema& masked_schema, const Schema& original,
                     const Example& x);

inline constexpr std::string_view kMaskedCategory = "__masked__";

// Deterministic 80/20 style split.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                          double train_fraction,
                                          std::uint64_t seed);

}  // namespace tabadv

#endif  // TABADV_DOMAIN_HPP_
