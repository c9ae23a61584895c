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

#include "tabadv/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tabadv {

using nlohmann::json;

std::string transform_name(Transform t) {
  switch (t) {
    case Transform::kIdentity:
      return "identity";
    case Transform::kLog2Complement:
      return "log2_complement";
    case Transform::kNaturalLog:
      return "ln";
  }
  return "identity";
}

Transform parse_transform(const std::string& name) {
  if (name == "identity") return Transform::kIdentity;
  if (name == "log2_complement") return Transform::kLog2Complement;
  if (name == "ln" || name == "natural_log") return Transform::kNaturalLog;
  throw ValidationError("unknown transform '" + name + "'");
}

double encode_numeric(Transform t, double x) {
  switch (t) {
    case Transform::kIdentity:
      return x;
    case Transform::kLog2Complement:
      if (!(x < 1.0)) {
        throw ValidationError("log2_complement transform needs x < 1, got " +
                              std::to_string(x));
      }
      return std::log2(1.0 - x);
    case Transform::kNaturalLog:
      if (!(x > 0.0)) {
        throw ValidationError("ln transform needs x > 0, got " +
                              std::to_string(x));
      }
      return std::log(x);
  }
  return x;
}

double decode_numeric(Transform t, double v) {
  switch (t) {
    case Transform::kIdentity:
      return v;
    case Transform::kLog2Complement:
      return 1.0 - std::exp2(v);
    case Transform::kNaturalLog:
      return std::exp(v);
  }
  return v;
}

bool transform_increasing(Transform t) {
  return t != Transform::kLog2Complement;
}

double encoded_increase_rate(const NumericCost& c) {
  return c.scale * (transform_increasing(c.transform) ? c.inc : c.dec);
}

double encoded_decrease_rate(const NumericCost& c) {
  return c.scale * (transform_increasing(c.transform) ? c.dec : c.inc);
}

void validate_cost_spec(const Schema& schema, const CostSpec& costs) {
  if (costs.categorical.size() != schema.size() ||
      costs.numeric.size() != schema.size()) {
    throw ValidationError("cost spec does not match schema size");
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const FeatureSpec& f = schema.features[i];
    if (f.categorical()) {
      const CategoricalCost& c = costs.categorical[i];
      const std::size_t k = f.categories.size();
      if (c.k != k || c.table.size() != k * k) {
        throw ValidationError("feature '" + f.name +
                              "': cost table is not square over its values");
      }
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
          const double v = c.table[a * k + b];
          if (a == b ? v != 0.0 : !(v > 0.0 && std::isfinite(v))) {
            throw ValidationError(
                "feature '" + f.name + "': cost " + f.categories[a] + "->" +
                f.categories[b] + " must be " +
                (a == b ? "zero" : "positive and finite"));
          }
        }
      }
    } else {
      const NumericCost& c = costs.numeric[i];
      if (!(c.inc > 0.0 && c.dec > 0.0 && c.scale > 0.0) ||
          !std::isfinite(c.inc) || !std::isfinite(c.dec) ||
          !std::isfinite(c.scale)) {
        throw ValidationError("feature '" + f.name +
                              "': numeric rates and K must be positive");
      }
      for (double g : f.grid) {
        try {
          encode_numeric(c.transform, g);
        } catch (const ValidationError& e) {
          throw ValidationError("feature '" + f.name + "': grid point " +
                                std::to_string(g) + ": " + e.what());
        }
      }
    }
  }
}

namespace {

CategoricalCost uniform_table(std::size_t k, double cost) {
  CategoricalCost c;
  c.k = k;
  c.table.assign(k * k, cost);
  for (std::size_t a = 0; a < k; ++a) c.table[a * k + a] = 0.0;
  return c;
}

}  // namespace

CostSpec uniform_costs(const Schema& schema, double categorical_cost,
                       double numeric_rate) {
  CostSpec spec;
  for (const FeatureSpec& f : schema.features) {
    spec.categorical.push_back(
        f.categorical() ? uniform_table(f.categories.size(), categorical_cost)
                        : CategoricalCost{});
    NumericCost n;
    n.inc = n.dec = numeric_rate;
    spec.numeric.push_back(n);
  }
  return spec;
}

CostSpec synthetic_costs(const Schema& schema) {
  static constexpr double kCycle[] = {1.0, 2.0, 5.0};
  CostSpec spec = uniform_costs(schema, 1.0, 1.0);
  std::size_t cat = 0;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const FeatureSpec& f = schema.features[i];
    if (f.categorical() && f.is_mutable) {
      spec.categorical[i] = uniform_table(f.categories.size(), kCycle[cat % 3]);
      ++cat;
    } else if (!f.categorical() && f.is_mutable) {
      spec.numeric[i].inc = 1.0;
      spec.numeric[i].dec = 2.0;
    }
  }
  return spec;
}

CostSpec parse_cost_spec(const Schema& schema, const json& doc) {
  CostSpec spec = uniform_costs(schema, 1.0, 1.0);
  try {
    const json& feats = doc.at("features");
    for (const json& jf : feats) {
      const std::string name = jf.at("name").get<std::string>();
      auto idx = schema.find(name);
      if (!idx) throw ValidationError("cost for unknown feature '" + name + "'");
      if (!jf.contains("cost")) continue;
      const json& jc = jf.at("cost");
      const FeatureSpec& f = schema.features[*idx];
      const std::string where = "feature '" + name + "' cost";
      if (f.categorical()) {
        const std::size_t k = f.categories.size();
        CategoricalCost c;
        c.k = k;
        // NaN marks entries the document did not set.
        c.table.assign(k * k, std::numeric_limits<double>::quiet_NaN());
        if (jc.contains("uniform")) {
          c = uniform_table(k, jc.at("uniform").get<double>());
        }
        if (jc.contains("table")) {
          const json& jt = jc.at("table");
          for (auto from = jt.begin(); from != jt.end(); ++from) {
            auto a = std::find(f.categories.begin(), f.categories.end(),
                               from.key());
            if (a == f.categories.end()) {
              throw ValidationError(where + ": unknown value '" + from.key() +
                                    "'");
            }
            for (auto to = from->begin(); to != from->end(); ++to) {
              auto b = std::find(f.categories.begin(), f.categories.end(),
                                 to.key());
              if (b == f.categories.end()) {
                throw ValidationError(where + ": unknown value '" + to.key() +
                                      "'");
              }
              const auto ia = static_cast<std::size_t>(a - f.categories.begin());
              const auto ib = static_cast<std::size_t>(b - f.categories.begin());
              c.table[ia * k + ib] = to->get<double>();
            }
          }
        }
        for (std::size_t a = 0; a < k; ++a) {
          c.table[a * k + a] = 0.0;
          for (std::size_t b = 0; b < k; ++b) {
            if (std::isnan(c.table[a * k + b])) {
              throw ValidationError(where + ": table is not square (missing " +
                                    f.categories[a] + "->" + f.categories[b] +
                                    ")");
            }
          }
        }
        spec.categorical[*idx] = std::move(c);
      } else {
        NumericCost n;
        n.inc = jc.value("inc", 1.0);
        n.dec = jc.value("dec", 1.0);
        n.scale = jc.value("K", 1.0);
        n.transform = parse_transform(jc.value("transform", "identity"));
        spec.numeric[*idx] = n;
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("cost spec parse error: ") + e.what());
  }
  validate_cost_spec(schema, spec);
  return spec;
}

CostSpec load_cost_spec(const Schema& schema,
                        const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return parse_cost_spec(schema, doc);
}

json schema_document(const Schema& schema, const CostSpec& costs) {
  json doc = schema_to_json(schema);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const FeatureSpec& f = schema.features[i];
    json& jf = doc["features"][i];
    if (f.categorical()) {
      const CategoricalCost& c = costs.categorical[i];
      bool uniform = true;
      double u = 0.0;
      for (std::size_t a = 0; a < c.k && uniform; ++a) {
        for (std::size_t b = 0; b < c.k; ++b) {
          if (a == b) continue;
          if (u == 0.0) u = c(a, b);
          if (c(a, b) != u) {
            uniform = false;
            break;
          }
        }
      }
      if (uniform && u > 0.0) {
        jf["cost"] = {{"uniform", u}};
      } else {
        json table = json::object();
        for (std::size_t a = 0; a < c.k; ++a) {
          json row = json::object();
          for (std::size_t b = 0; b < c.k; ++b) {
            if (a != b) row[f.categories[b]] = c(a, b);
          }
          table[f.categories[a]] = std::move(row);
        }
        jf["cost"] = {{"table", std::move(table)}};
      }
    } else {
      const NumericCost& n = costs.numeric[i];
      jf["cost"] = {{"inc", n.inc},
                    {"dec", n.dec},
                    {"K", n.scale},
                    {"transform", transform_name(n.transform)}};
    }
  }
  return doc;
}

double numeric_feature_cost(const CostSpec& costs, std::size_t i, double a,
                            double b) {
  const NumericCost& c = costs.numeric[i];
  if (a == b) return 0.0;
  const double diff = std::abs(encode_numeric(c.transform, b) -
                               encode_numeric(c.transform, a));
  return c.scale * (b > a ? c.inc : c.dec) * diff;
}

double feature_cost(const Schema& schema, const CostSpec& costs,
                    std::size_t i, std::uint32_t a, std::uint32_t b) {
  if (a == b) return 0.0;
  const FeatureSpec& f = schema.features[i];
  if (f.categorical()) return costs.categorical[i](a, b);
  return numeric_feature_cost(costs, i, f.grid[a], f.grid[b]);
}

double total_cost(const Schema& schema, const CostSpec& costs,
                  const Example& x, const Example& x_prime) {
  double sum = 0.0;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (x.codes[i] != x_prime.codes[i]) {
      sum += feature_cost(schema, costs, i, x.codes[i], x_prime.codes[i]);
    }
  }
  return sum;
}

double gain(const Schema& schema, const Example& x) {
  if (schema.gain.constant) return *schema.gain.constant;
  auto idx = schema.find(*schema.gain.column);
  if (!idx) {
    throw ValidationError("gain column '" + *schema.gain.column +
                          "' missing");
  }
  return numeric_value(schema, x, *idx);
}

double cost_bound_for_margin(double gain_value, double tau) {
  return std::max(gain_value - tau, 0.0);
}

double min_categorical_change_cost(const Schema& schema,
                                   const CostSpec& costs, const Example& x,
                                   std::size_t i) {
  const FeatureSpec& f = schema.features[i];
  if (!f.categorical()) {
    throw std::invalid_argument("feature '" + f.name + "' is not categorical");
  }
  if (!f.is_mutable || f.categories.size() < 2) {
    throw std::invalid_argument("feature '" + f.name +
                                "' admits no feasible change");
  }
  const CategoricalCost& c = costs.categorical[i];
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t t = 0; t < c.k; ++t) {
    if (t != x.codes[i]) best = std::min(best, c(x.codes[i], t));
  }
  return best;
}

Encoder::Encoder(Schema schema, CostSpec costs)
    : schema_(std::move(schema)), costs_(std::move(costs)) {
  validate_cost_spec(schema_, costs_);
  spans_.reserve(schema_.size());
  for (const FeatureSpec& f : schema_.features) {
    const std::size_t w = f.categorical() ? f.categories.size() : 1;
    spans_.push_back({dim_, w});
    dim_ += w;
  }
}

NumericCost Encoder::numeric_cost_for(const Example& anchor,
                                      std::size_t i) const {
  if (rate_cb_) return rate_cb_(anchor, i);
  return costs_.numeric[i];
}

void Encoder::encode_into(const Example& x, std::span<double> out) const {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    const FeatureSpec& f = schema_.features[i];
    const FeatureSpan& s = spans_[i];
    if (f.categorical()) {
      for (std::size_t k = 0; k < s.width; ++k) out[s.offset + k] = 0.0;
      out[s.offset + x.codes[i]] = 1.0;
    } else {
      out[s.offset] =
          encode_numeric(costs_.numeric[i].transform, f.grid[x.codes[i]]);
    }
  }
}

EncodedVector Encoder::encode(const Example& x) const {
  EncodedVector v(dim_);
  encode_into(x, v);
  return v;
}

Example Encoder::decode(std::span<const double> v, int label) const {
  Example x;
  x.label = label;
  x.codes.resize(schema_.size());
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    const FeatureSpec& f = schema_.features[i];
    const FeatureSpan& s = spans_[i];
    if (f.categorical()) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < s.width; ++k) {
        if (v[s.offset + k] > v[s.offset + best]) best = k;
      }
      x.codes[i] = static_cast<std::uint32_t>(best);
    } else {
      double raw = decode_numeric(costs_.numeric[i].transform, v[s.offset]);
      if (std::isnan(raw)) raw = f.lower;
      raw = std::clamp(raw, f.lower, f.upper);
      auto it = std::lower_bound(f.grid.begin(), f.grid.end(), raw);
      std::size_t code;
      if (it == f.grid.begin()) {
        code = 0;
      } else if (it == f.grid.end()) {
        code = f.grid.size() - 1;
      } else {
        const auto hi = static_cast<std::size_t>(it - f.grid.begin());
        code = (raw - f.grid[hi - 1] <= f.grid[hi] - raw) ? hi - 1 : hi;
      }
      x.codes[i] = static_cast<std::uint32_t>(code);
    }
  }
  return x;
}

double Encoder::relaxed_cost(const Example& anchor, std::span<const double> v,
                             std::span<const double> v_prime) const {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    const FeatureSpec& f = schema_.features[i];
    const FeatureSpan& s = spans_[i];
    if (f.categorical()) {
      double l1 = 0.0;
      for (std::size_t k = 0; k < s.width; ++k) {
        l1 += std::abs(v[s.offset + k] - v_prime[s.offset + k]);
      }
      if (l1 == 0.0) continue;
      if (!f.is_mutable || f.categories.size() < 2) return kInf;
      sum += min_categorical_change_cost(schema_, costs_, anchor, i) * 0.5 * l1;
    } else {
      const double d = v_prime[s.offset] - v[s.offset];
      if (d == 0.0) continue;
      if (!f.is_mutable) return kInf;
      const NumericCost c = numeric_cost_for(anchor, i);
      sum += d > 0.0 ? encoded_increase_rate(c) * d
                     : encoded_decrease_rate(c) * -d;
    }
  }
  return sum;
}

double Encoder::relaxed_cost(std::span<const double> v,
                             std::span<const double> v_prime) const {
  return relaxed_cost(decode(v), v, v_prime);
}

}  // namespace tabadv
