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

#include "tabadv/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tabadv/rng.hpp"

namespace tabadv {

using nlohmann::json;

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

bool Schema::has_mutable() const {
  return std::any_of(features.begin(), features.end(),
                     [](const FeatureSpec& f) { return f.is_mutable; });
}

std::size_t ExampleHash::operator()(const Example& x) const noexcept {
  // FNV-1a over the codes.
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint32_t c : x.codes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

double numeric_value(const Schema& schema, const Example& x, std::size_t i) {
  return schema.features[i].grid[x.codes[i]];
}

namespace {

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string value_string(const Schema& schema, const Example& x,
                         std::size_t i) {
  const FeatureSpec& f = schema.features[i];
  if (f.categorical()) return f.categories[x.codes[i]];
  return format_number(f.grid[x.codes[i]]);
}

void validate_schema(const Schema& schema) {
  std::set<std::string> names;
  for (const FeatureSpec& f : schema.features) {
    if (f.name.empty()) throw ValidationError("feature with empty name");
    if (!names.insert(f.name).second) {
      throw ValidationError("duplicate feature name '" + f.name + "'");
    }
    if (f.categorical()) {
      if (f.categories.empty()) {
        throw ValidationError("feature '" + f.name +
                              "': categorical value list is empty");
      }
      std::set<std::string> seen;
      for (const auto& c : f.categories) {
        if (!seen.insert(c).second) {
          throw ValidationError("feature '" + f.name +
                                "': duplicate category '" + c + "'");
        }
      }
    } else {
      if (!(f.lower <= f.upper)) {
        throw ValidationError("feature '" + f.name + "': lower > upper");
      }
      if (f.grid.empty()) {
        throw ValidationError("feature '" + f.name + "': empty grid");
      }
      for (std::size_t k = 0; k < f.grid.size(); ++k) {
        if (!std::isfinite(f.grid[k]) || f.grid[k] < f.lower ||
            f.grid[k] > f.upper) {
          throw ValidationError("feature '" + f.name + "': grid point " +
                                std::to_string(k) + " outside [lower, upper]");
        }
        if (k > 0 && !(f.grid[k] > f.grid[k - 1])) {
          throw ValidationError("feature '" + f.name +
                                "': grid not strictly increasing at index " +
                                std::to_string(k));
        }
      }
    }
  }
  if (schema.label.empty()) throw ValidationError("schema has no label");
  if (names.count(schema.label)) {
    throw ValidationError("label '" + schema.label +
                          "' is also listed as a feature");
  }
  const GainSpec& g = schema.gain;
  if (g.column.has_value() == g.constant.has_value()) {
    throw ValidationError("gain must declare exactly one of column/constant");
  }
  if (g.constant && !(*g.constant >= 0.0)) {
    throw ValidationError("gain constant must be non-negative");
  }
  if (g.column) {
    auto idx = schema.find(*g.column);
    if (!idx) {
      throw ValidationError("gain column '" + *g.column + "' is not a feature");
    }
    const FeatureSpec& f = schema.features[*idx];
    if (f.categorical()) {
      throw ValidationError("gain column '" + *g.column + "' is not numeric");
    }
    if (f.lower < 0.0) {
      throw ValidationError("gain column '" + *g.column +
                            "' admits negative values");
    }
  }
}

void validate_example(const Schema& schema, const Example& x) {
  if (x.codes.size() != schema.size()) {
    throw ValidationError("example has " + std::to_string(x.codes.size()) +
                          " values, schema has " +
                          std::to_string(schema.size()) + " features");
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (x.codes[i] >= schema.features[i].cardinality()) {
      throw ValidationError("feature '" + schema.features[i].name +
                            "': code out of range");
    }
  }
  if (x.label != 0 && x.label != 1) {
    throw ValidationError("label must be 0 or 1");
  }
}

Schema parse_schema(const json& doc) {
  Schema schema;
  try {
    const json& feats = doc.at("features");
    if (!feats.is_array()) throw ValidationError("'features' must be an array");
    for (std::size_t k = 0; k < feats.size(); ++k) {
      const json& jf = feats[k];
      FeatureSpec f;
      f.name = jf.at("name").get<std::string>();
      const std::string where =
          "feature '" + f.name + "' (features[" + std::to_string(k) + "])";
      const std::string kind = jf.at("kind").get<std::string>();
      f.is_mutable = jf.value("mutable", false);
      if (kind == "categorical") {
        f.kind = FeatureKind::kCategorical;
        f.categories = jf.at("values").get<std::vector<std::string>>();
        if (f.categories.empty()) {
          throw ValidationError(where + ": categorical value list is empty");
        }
      } else if (kind == "numeric") {
        f.kind = FeatureKind::kNumeric;
        const json& range = jf.at("range");
        if (!range.is_array() || range.size() != 2) {
          throw ValidationError(where + ": 'range' must be [min, max]");
        }
        f.lower = range[0].get<double>();
        f.upper = range[1].get<double>();
        f.grid = jf.at("grid").get<std::vector<double>>();
        for (std::size_t g = 1; g < f.grid.size(); ++g) {
          if (!(f.grid[g] > f.grid[g - 1])) {
            throw ValidationError(where + ": grid not strictly increasing at "
                                          "index " + std::to_string(g));
          }
        }
      } else {
        throw ValidationError(where + ": unknown kind '" + kind + "'");
      }
      schema.features.push_back(std::move(f));
    }
    schema.label = doc.at("label").get<std::string>();
    const json& gain = doc.at("gain");
    if (gain.contains("column")) {
      schema.gain.column = gain.at("column").get<std::string>();
    }
    if (gain.contains("constant")) {
      schema.gain.constant = gain.at("constant").get<double>();
    }
    const std::string mode = gain.value("mode", "constant");
    if (mode == "constant") {
      schema.gain.mode = GainMode::kConstant;
    } else if (mode == "variable") {
      schema.gain.mode = GainMode::kVariable;
    } else {
      throw ValidationError("gain: unknown mode '" + mode + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("schema parse error: ") + e.what());
  }
  validate_schema(schema);
  return schema;
}

json schema_to_json(const Schema& schema) {
  json feats = json::array();
  for (const FeatureSpec& f : schema.features) {
    json jf = {{"name", f.name}, {"mutable", f.is_mutable}};
    if (f.categorical()) {
      jf["kind"] = "categorical";
      jf["values"] = f.categories;
    } else {
      jf["kind"] = "numeric";
      jf["range"] = {f.lower, f.upper};
      jf["grid"] = f.grid;
    }
    feats.push_back(std::move(jf));
  }
  json gain = json::object();
  if (schema.gain.column) gain["column"] = *schema.gain.column;
  if (schema.gain.constant) gain["constant"] = *schema.gain.constant;
  gain["mode"] =
      schema.gain.mode == GainMode::kVariable ? "variable" : "constant";
  return {{"features", feats}, {"label", schema.label}, {"gain", gain}};
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

Schema load_schema(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  try {
    return parse_schema(doc);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
    } else if (c == '\n') {
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw ValidationError("csv: unterminated quoted field");
  if (field_started || !row.empty()) end_row();
  return rows;
}

namespace {

bool parse_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first == last) return false;
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::uint32_t nearest_grid_index(const std::vector<double>& grid, double v) {
  auto it = std::lower_bound(grid.begin(), grid.end(), v);
  if (it == grid.begin()) return 0;
  if (it == grid.end()) return static_cast<std::uint32_t>(grid.size() - 1);
  const auto hi = static_cast<std::size_t>(it - grid.begin());
  // Ties go to the lower grid point.
  return (v - grid[hi - 1] <= grid[hi] - v)
             ? static_cast<std::uint32_t>(hi - 1)
             : static_cast<std::uint32_t>(hi);
}

}  // namespace

Dataset parse_dataset(const Schema& schema, std::string_view csv_text) {
  const auto table = parse_csv(csv_text);
  if (table.empty()) throw ValidationError("csv: missing header row");
  const auto& header = table.front();
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t c = 0; c < header.size(); ++c) col[header[c]] = c;
  std::vector<std::size_t> feature_col(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    auto it = col.find(schema.features[i].name);
    if (it == col.end()) {
      throw ValidationError("csv: missing column '" + schema.features[i].name +
                            "'");
    }
    feature_col[i] = it->second;
  }
  auto label_it = col.find(schema.label);
  if (label_it == col.end()) {
    throw ValidationError("csv: missing label column '" + schema.label + "'");
  }
  std::vector<std::unordered_map<std::string, std::uint32_t>> lookup(
      schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const FeatureSpec& f = schema.features[i];
    for (std::size_t k = 0; k < f.categories.size(); ++k) {
      lookup[i][f.categories[k]] = static_cast<std::uint32_t>(k);
    }
  }

  Dataset data{schema, {}};
  data.rows.reserve(table.size() - 1);
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& cells = table[r];
    const std::string where = "csv row " + std::to_string(r);
    if (cells.size() != header.size()) {
      throw ValidationError(where + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(cells.size()));
    }
    Example x;
    x.codes.resize(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const FeatureSpec& f = schema.features[i];
      const std::string& cell = cells[feature_col[i]];
      if (f.categorical()) {
        auto it = lookup[i].find(cell);
        if (it == lookup[i].end()) {
          throw ValidationError(where + ", column '" + f.name +
                                "': unknown category '" + cell + "'");
        }
        x.codes[i] = it->second;
      } else {
        double v;
        if (!parse_double(cell, v)) {
          throw ValidationError(where + ", column '" + f.name +
                                "': not a number '" + cell + "'");
        }
        if (v < f.lower || v > f.upper) {
          throw ValidationError(where + ", column '" + f.name + "': value " +
                                cell + " outside [" + format_number(f.lower) +
                                ", " + format_number(f.upper) + "]");
        }
        x.codes[i] = nearest_grid_index(f.grid, v);
      }
    }
    const std::string& lab = cells[label_it->second];
    double lv;
    if (lab == "0" || lab == "1") {
      x.label = lab == "1" ? 1 : 0;
    } else if (parse_double(lab, lv) && (lv == 0.0 || lv == 1.0)) {
      x.label = lv == 1.0 ? 1 : 0;
    } else {
      throw ValidationError(where + ", column '" + schema.label +
                            "': label must be 0 or 1, got '" + lab + "'");
    }
    data.rows.push_back(std::move(x));
  }
  return data;
}

Dataset load_dataset(const Schema& schema, const std::filesystem::path& path) {
  try {
    return parse_dataset(schema, read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  for (const FeatureSpec& f : data.schema.features) {
    out += csv_escape(f.name);
    out += ',';
  }
  out += csv_escape(data.schema.label);
  out += '\n';
  for (const Example& x : data.rows) {
    for (std::size_t i = 0; i < data.schema.size(); ++i) {
      out += csv_escape(value_string(data.schema, x, i));
      out += ',';
    }
    out += x.label == 1 ? "1\n" : "0\n";
  }
  return out;
}

std::vector<std::uint32_t> feasible_values(const Schema& schema,
                                           const Example& x, std::size_t i) {
  const FeatureSpec& f = schema.features[i];
  if (!f.is_mutable) return {x.codes[i]};
  std::vector<std::uint32_t> out(f.cardinality());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = static_cast<std::uint32_t>(k);
  }
  return out;
}

void for_each_edit(
    const Schema& schema, const Example& x,
    const std::function<void(std::size_t, std::uint32_t)>& visit) {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const FeatureSpec& f = schema.features[i];
    if (!f.is_mutable) continue;
    const auto n = static_cast<std::uint32_t>(f.cardinality());
    for (std::uint32_t k = 0; k < n; ++k) {
      if (k != x.codes[i]) visit(i, k);
    }
  }
}

std::vector<Neighbor> neighbors(const Schema& schema, const Example& x) {
  std::vector<Neighbor> out;
  for_each_edit(schema, x, [&](std::size_t i, std::uint32_t code) {
    Neighbor n{x, i};
    n.example.codes[i] = code;
    out.push_back(std::move(n));
  });
  return out;
}

void SyntheticConfig::validate() const {
  if (rows == 0) throw ValidationError("synthetic config: rows must be > 0");
  if (mutable_categorical + mutable_numeric == 0) {
    throw ValidationError("synthetic config: no mutable features");
  }
  if (categories_per_feature < 2) {
    throw ValidationError("synthetic config: categories_per_feature < 2");
  }
  if (grid_points < 2) {
    throw ValidationError("synthetic config: grid_points < 2");
  }
  if (!(positive_rate > 0.0 && positive_rate < 1.0)) {
    throw ValidationError("synthetic config: positive_rate must be in (0,1)");
  }
  if (!(gain_min >= 0.0 && gain_max > gain_min)) {
    throw ValidationError("synthetic config: need 0 <= gain_min < gain_max");
  }
}

SyntheticConfig SyntheticConfig::from_json(const json& doc) {
  SyntheticConfig c;
  try {
    c.rows = doc.value("rows", c.rows);
    c.mutable_categorical = doc.value("mutable_categorical",
                                      c.mutable_categorical);
    c.categories_per_feature = doc.value("categories_per_feature",
                                         c.categories_per_feature);
    c.mutable_numeric = doc.value("mutable_numeric", c.mutable_numeric);
    c.immutable_categorical = doc.value("immutable_categorical",
                                        c.immutable_categorical);
    c.immutable_numeric = doc.value("immutable_numeric", c.immutable_numeric);
    c.grid_points = doc.value("grid_points", c.grid_points);
    c.separation = doc.value("separation", c.separation);
    c.mutable_weight = doc.value("mutable_weight", c.mutable_weight);
    c.positive_rate = doc.value("positive_rate", c.positive_rate);
    c.gain_min = doc.value("gain_min", c.gain_min);
    c.gain_max = doc.value("gain_max", c.gain_max);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("synthetic config: ") + e.what());
  }
  c.validate();
  if (!(c.separation > 0.0)) {
    throw ValidationError("synthetic config: separation must be positive");
  }
  return c;
}

json SyntheticConfig::to_json() const {
  return {{"rows", rows},
          {"mutable_categorical", mutable_categorical},
          {"categories_per_feature", categories_per_feature},
          {"mutable_numeric", mutable_numeric},
          {"immutable_categorical", immutable_categorical},
          {"immutable_numeric", immutable_numeric},
          {"grid_points", grid_points},
          {"separation", separation},
          {"mutable_weight", mutable_weight},
          {"positive_rate", positive_rate},
          {"gain_min", gain_min},
          {"gain_max", gain_max}};
}

namespace {

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = lo + (hi - lo) * static_cast<double>(k) /
                    static_cast<double>(n - 1);
  }
  g.back() = hi;
  return g;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& c, std::uint64_t seed) {
  c.validate();
  Rng rng(seed);
  Schema schema;
  schema.label = "fraud";
  std::vector<std::vector<double>> effects;  // per feature, per code

  auto add_categorical = [&](const std::string& name, bool mut,
                             std::size_t n, double scale) {
    FeatureSpec f;
    f.name = name;
    f.kind = FeatureKind::kCategorical;
    f.is_mutable = mut;
    for (std::size_t k = 0; k < n; ++k) {
      f.categories.push_back(std::string(1, static_cast<char>('a' + k % 26)) +
                             (k >= 26 ? std::to_string(k / 26) : ""));
    }
    std::vector<double> eff(n);
    for (auto& e : eff) e = scale * rng.normal();
    effects.push_back(std::move(eff));
    schema.features.push_back(std::move(f));
  };
  auto add_numeric = [&](const std::string& name, bool mut, double lo,
                         double hi, std::size_t n, double slope) {
    FeatureSpec f;
    f.name = name;
    f.kind = FeatureKind::kNumeric;
    f.is_mutable = mut;
    f.lower = lo;
    f.upper = hi;
    f.grid = linear_grid(lo, hi, n);
    std::vector<double> eff(n);
    for (std::size_t k = 0; k < n; ++k) {
      // Centered linear effect over the grid.
      eff[k] = slope * ((f.grid[k] - lo) / (hi - lo) - 0.5) * 2.0;
    }
    effects.push_back(std::move(eff));
    schema.features.push_back(std::move(f));
  };

  for (std::size_t j = 0; j < c.mutable_categorical; ++j) {
    add_categorical("mcat" + std::to_string(j), true, c.categories_per_feature,
                    c.mutable_weight);
  }
  for (std::size_t j = 0; j < c.mutable_numeric; ++j) {
    const double slope =
        c.mutable_weight * (rng.uniform() < 0.5 ? -1.0 : 1.0) *
        rng.uniform(0.5, 1.0);
    add_numeric("mnum" + std::to_string(j), true, 0.0, 10.0, c.grid_points,
                slope);
  }
  for (std::size_t j = 0; j < c.immutable_categorical; ++j) {
    add_categorical("icat" + std::to_string(j), false,
                    c.categories_per_feature, 1.0);
  }
  for (std::size_t j = 0; j < c.immutable_numeric; ++j) {
    const double slope = (rng.uniform() < 0.5 ? -1.0 : 1.0) *
                         rng.uniform(0.5, 1.5);
    add_numeric("inum" + std::to_string(j), false, -3.0, 3.0, c.grid_points,
                slope);
  }
  add_numeric("amount", false, c.gain_min, c.gain_max, c.grid_points, 0.3);
  schema.gain.column = "amount";
  schema.gain.mode = GainMode::kConstant;
  validate_schema(schema);

  // Sample rows, then shift the intercept so the positive rate matches.
  const std::size_t m = schema.size();
  std::vector<Example> rows(c.rows);
  std::vector<double> latent(c.rows);
  std::vector<double> noise(c.rows);
  for (std::size_t r = 0; r < c.rows; ++r) {
    rows[r].codes.resize(m);
    double z = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto card = schema.features[i].cardinality();
      const auto code = static_cast<std::uint32_t>(rng.below(card));
      rows[r].codes[i] = code;
      z += effects[i][code];
    }
    latent[r] = c.separation * z;
    noise[r] = rng.uniform();
  }
  std::vector<double> sorted = latent;
  std::sort(sorted.begin(), sorted.end());
  const auto q = static_cast<std::size_t>(
      std::clamp((1.0 - c.positive_rate) * static_cast<double>(c.rows), 0.0,
                 static_cast<double>(c.rows - 1)));
  const double intercept = -sorted[q];
  for (std::size_t r = 0; r < c.rows; ++r) {
    rows[r].label = noise[r] < logistic(latent[r] + intercept) ? 1 : 0;
  }
  return Dataset{std::move(schema), std::move(rows)};
}

namespace {

std::uint32_t sentinel_code(const FeatureSpec& f) {
  if (f.categorical()) {
    return static_cast<std::uint32_t>(f.categories.size() - 1);
  }
  return nearest_grid_index(f.grid, 0.0);
}

bool already_masked(const FeatureSpec& f) {
  return f.categorical() && !f.categories.empty() &&
         f.categories.back() == kMaskedCategory;
}

}  // namespace

Example mask_example(const Schema& masked_schema, const Schema& original,
                     const Example& x) {
  Example out = x;
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original.features[i].is_mutable) {
      out.codes[i] = sentinel_code(masked_schema.features[i]);
    }
  }
  return out;
}

Dataset mask_mutable(const Dataset& data) {
  Dataset out{data.schema, {}};
  for (FeatureSpec& f : out.schema.features) {
    if (f.is_mutable && f.categorical() && !already_masked(f)) {
      f.categories.emplace_back(kMaskedCategory);
    }
  }
  out.rows.reserve(data.rows.size());
  for (const Example& x : data.rows) {
    out.rows.push_back(mask_example(out.schema, data.schema, x));
  }
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                          double train_fraction,
                                          std::uint64_t seed) {
  std::vector<std::size_t> order(data.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(order.size())));
  Dataset train{data.schema, {}};
  Dataset test{data.schema, {}};
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_train ? train : test).rows.push_back(data.rows[order[k]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace tabadv
