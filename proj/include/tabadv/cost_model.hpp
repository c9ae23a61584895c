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

#ifndef TABADV_COST_MODEL_HPP_
#define TABADV_COST_MODEL_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabadv/domain.hpp"

namespace tabadv {

// Encoding transform for a numeric feature. The encoded coordinate is
// phi(x); the cost of a change is K * rate * |phi(b) - phi(a)|.
enum class Transform {
  kIdentity,        // phi(x) = x
  kLog2Complement,  // phi(x) = log2(1 - x), x < 1
  kNaturalLog,      // phi(x) = ln(x), x > 0
};

std::string transform_name(Transform t);
Transform parse_transform(const std::string& name);

// phi and its inverse. Throw ValidationError outside the domain.
double encode_numeric(Transform t, double x);
double decode_numeric(Transform t, double v);
// True when phi is increasing in x.
bool transform_increasing(Transform t);

struct CategoricalCost {
  // Row-major k x k table, table[a * k + b] = c(a -> b), zero diagonal.
  std::vector<double> table;
  std::size_t k = 0;

  double operator()(std::uint32_t from, std::uint32_t to) const {
    return table[from * k + to];
  }
};

struct NumericCost {
  double inc = 1.0;  // rate for raising the raw value
  double dec = 1.0;  // rate for lowering the raw value
  double scale = 1.0;  // K
  Transform transform = Transform::kIdentity;
};

// Per-feature modification costs. Index-aligned with Schema::features.
struct CostSpec {
  std::vector<CategoricalCost> categorical;  // empty entry for numeric
  std::vector<NumericCost> numeric;          // default entry for categorical
};

// Reads the "cost" member of each feature object of a schema document.
// Features without one get uniform cost 1 (categorical) or unit rates with
// the identity transform (numeric).
CostSpec parse_cost_spec(const Schema& schema, const nlohmann::json& doc);
CostSpec load_cost_spec(const Schema& schema,
                        const std::filesystem::path& path);
// Full schema document including the cost members.
nlohmann::json schema_document(const Schema& schema, const CostSpec& costs);
void validate_cost_spec(const Schema& schema, const CostSpec& costs);

CostSpec uniform_costs(const Schema& schema, double categorical_cost,
                       double numeric_rate);
// Costs for `generate_synthetic` output: mutable categorical features get
// uniform costs cycling through {1, 2, 5}, mutable numerics unit increase
// and doubled decrease rates.
CostSpec synthetic_costs(const Schema& schema);

// Cost of changing feature `i` from code `a` to code `b`.
double feature_cost(const Schema& schema, const CostSpec& costs,
                    std::size_t i, std::uint32_t a, std::uint32_t b);
// Raw-value form for numeric features.
double numeric_feature_cost(const CostSpec& costs, std::size_t i, double a,
                            double b);
// Modular cost: sum of per-feature costs over differing features.
double total_cost(const Schema& schema, const CostSpec& costs,
                  const Example& x, const Example& x_prime);

double gain(const Schema& schema, const Example& x);
inline double utility(double gain_value, double cost_value) {
  return gain_value - cost_value;
}
// Per-example budget for a utility margin: [g - tau]_+.
double cost_bound_for_margin(double gain_value, double tau);

// Cheapest change of feature `i` away from x_i. Throws std::invalid_argument
// when the feature admits no change.
double min_categorical_change_cost(const Schema& schema,
                                   const CostSpec& costs, const Example& x,
                                   std::size_t i);

struct FeatureSpan {
  std::size_t offset = 0;
  std::size_t width = 0;
};

using EncodedVector = std::vector<double>;

// Layout of the encoded space: categorical features become one-hot blocks,
// numeric features one coordinate holding phi(x).
class Encoder {
 public:
  Encoder(Schema schema, CostSpec costs);

  const Schema& schema() const { return schema_; }
  const CostSpec& costs() const { return costs_; }
  std::size_t dim() const { return dim_; }
  const FeatureSpan& span(std::size_t feature) const { return spans_[feature]; }
  const std::vector<FeatureSpan>& spans() const { return spans_; }

  EncodedVector encode(const Example& x) const;
  void encode_into(const Example& x, std::span<double> out) const;
  // Argmax per block (lowest index on ties); numeric coordinates map back
  // through phi^-1 and snap to the nearest grid point. Label is copied from
  // `label`.
  Example decode(std::span<const double> v, int label = 0) const;

  // Relaxed cost between encodings, anchored at the valid example `anchor`
  // (needed for table minima and mutability). Changes to immutable features
  // cost +inf.
  double relaxed_cost(const Example& anchor, std::span<const double> v,
                      std::span<const double> v_prime) const;
  // Same, recovering the anchor by decoding `v`.
  double relaxed_cost(std::span<const double> v,
                      std::span<const double> v_prime) const;

  // Optional per-example override of numeric rates used by the relaxed
  // cost and the projection. Default: the constant CostSpec rates. The
  // relaxed cost stays a lower bound only while overrides never exceed them.
  using RateCallback =
      std::function<NumericCost(const Example& anchor, std::size_t feature)>;
  void set_rate_callback(RateCallback cb) { rate_cb_ = std::move(cb); }
  NumericCost numeric_cost_for(const Example& anchor, std::size_t i) const;

 private:
  Schema schema_;
  CostSpec costs_;
  std::vector<FeatureSpan> spans_;
  std::size_t dim_ = 0;
  RateCallback rate_cb_;
};

// Encoded-space increase / decrease rates of a numeric cost.
double encoded_increase_rate(const NumericCost& c);
double encoded_decrease_rate(const NumericCost& c);

}  // namespace tabadv

#endif  // TABADV_COST_MODEL_HPP_
