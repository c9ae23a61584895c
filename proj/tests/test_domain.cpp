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

#include <set>
#include <string>

#include "doctest.h"
#include "tabadv/domain.hpp"
#include "tabadv/models.hpp"
#include "test_support.hpp"

using namespace tabadv;
using namespace tabadv::testing;
using nlohmann::json;

namespace {

json three_feature_doc() {
  return json::parse(R"({
    "features": [
      {"name": "device", "kind": "categorical", "values": ["a", "b", "c", "d"], "mutable": true},
      {"name": "age", "kind": "numeric", "range": [0, 100], "grid": [0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100], "mutable": true},
      {"name": "country", "kind": "categorical", "values": ["x", "y"], "mutable": false}
    ],
    "label": "fraud",
    "gain": {"constant": 200}
  })");
}

std::string error_of(const json& doc) {
  try {
    parse_schema(doc);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("schema parsing accepts a well-formed three-feature file") {
  const Schema s = parse_schema(three_feature_doc());
  CHECK(s.size() == 3);
  CHECK(s.label == "fraud");
  CHECK(s.features[0].categorical());
  CHECK(s.features[1].grid.size() == 11);
  CHECK_FALSE(s.features[2].is_mutable);
  CHECK(*s.gain.constant == 200.0);
  const Schema back = parse_schema(schema_to_json(s));
  CHECK(back.size() == 3);
  CHECK(back.features[1].grid == s.features[1].grid);
}

TEST_CASE("schema validation reports the offending feature") {
  json dup = three_feature_doc();
  dup["features"][2]["name"] = "device";
  CHECK(error_of(dup).find("device") != std::string::npos);

  json empty = three_feature_doc();
  empty["features"][0]["values"] = json::array();
  CHECK(error_of(empty).find("device") != std::string::npos);

  json grid = three_feature_doc();
  grid["features"][1]["grid"] = json::array({0, 20, 10});
  CHECK(error_of(grid).find("age") != std::string::npos);

  json out = three_feature_doc();
  out["features"][1]["grid"] = json::array({0, 50, 150});
  CHECK_FALSE(error_of(out).empty());

  json label = three_feature_doc();
  label["label"] = "age";
  CHECK_FALSE(error_of(label).empty());

  CHECK_THROWS_AS(parse_schema(json::parse(R"({"label": "y"})")), ValidationError);
}

TEST_CASE("dataset ingestion") {
  const Schema s = parse_schema(three_feature_doc());
  const Dataset d = parse_dataset(s, "device,age,country,fraud\nb,20,x,1\nd,100,y,0\n");
  REQUIRE(d.rows.size() == 2);
  CHECK(d.rows[0].codes == std::vector<std::uint32_t>{1, 2, 0});
  CHECK(d.rows[0].label == 1);
  CHECK(d.rows[1].label == 0);

  try {
    parse_dataset(s, "device,age,country,fraud\na,10,x,0\ne,20,x,1\n");
    FAIL("unknown category accepted");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("device") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_dataset(s, "device,age,country,fraud\na,10,x,2\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_dataset(s, "device,age,country,fraud\na,101,x,1\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_dataset(s, "device,country,fraud\na,x,1\n"),
                  ValidationError);
  // Quoted fields and CRLF line ends.
  const Dataset q = parse_dataset(s, "\"device\",age,country,fraud\r\n\"c\",30,\"y\",1\r\n");
  CHECK(q.rows[0].codes == std::vector<std::uint32_t>{2, 3, 1});
  // Round trip through CSV.
  const Dataset again = parse_dataset(s, dataset_to_csv(d));
  CHECK(again.rows[0] == d.rows[0]);
  CHECK(again.rows[1].label == 0);
}

TEST_CASE("feasible values") {
  const Schema s = parse_schema(three_feature_doc());
  const Example x = example({1, 5, 0});
  CHECK(feasible_values(s, x, 0) == std::vector<std::uint32_t>{0, 1, 2, 3});
  CHECK(feasible_values(s, x, 1).size() == 11);
  CHECK(feasible_values(s, x, 2) == std::vector<std::uint32_t>{0});
}

TEST_CASE("neighbor counts") {
  const Schema none = schema_of({categorical("a", 3, false), categorical("b", 4, false)});
  CHECK(neighbors(none, example({0, 0})).empty());

  const Schema two = schema_of({categorical("a", 3, true), categorical("b", 4, true)});
  CHECK(neighbors(two, example({1, 2})).size() == 5);

  // Exhaustive one-feature-edit enumeration on random schemas.
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_problem(rng, 1 + rng.below(5), 1u << 20);
    const Example x = random_example(rng, p.schema, 1);
    std::set<std::vector<std::uint32_t>> brute;
    for (const Example& z : reachable_examples(p.schema, x)) {
      std::size_t diff = 0;
      for (std::size_t i = 0; i < x.codes.size(); ++i) diff += z.codes[i] != x.codes[i];
      if (diff == 1) brute.insert(z.codes);
    }
    const auto ns = neighbors(p.schema, x);
    std::set<std::vector<std::uint32_t>> got;
    std::size_t expected = 0;
    for (std::size_t i = 0; i < p.schema.size(); ++i) {
      if (p.schema.features[i].is_mutable) {
        expected += feasible_values(p.schema, x, i).size() - 1;
      }
    }
    for (const auto& n : ns) {
      got.insert(n.example.codes);
      CHECK(n.example.codes[n.feature] != x.codes[n.feature]);
    }
    CHECK(ns.size() == expected);
    CHECK(got.size() == ns.size());
    CHECK(got == brute);
    // Topological symmetry.
    for (const auto& n : ns) {
      bool back = false;
      for (const auto& m : neighbors(p.schema, n.example)) back = back || m.example == x;
      CHECK(back);
    }
  }
}

TEST_CASE("feasible set closure") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_problem(rng, 4, 1u << 20);
    const Example x = random_example(rng, p.schema, 0);
    for (std::size_t i = 0; i < p.schema.size(); ++i) {
      for (std::uint32_t c : feasible_values(p.schema, x, i)) {
        Example z = x;
        z.codes[i] = c;
        CHECK_NOTHROW(validate_example(p.schema, z));
      }
    }
  }
}

TEST_CASE("synthetic generator") {
  SyntheticConfig cfg;
  const Dataset a = generate_synthetic(cfg, 3);
  const Dataset b = generate_synthetic(cfg, 3);
  const Dataset c = generate_synthetic(cfg, 4);
  CHECK(dataset_to_csv(a) == dataset_to_csv(b));
  CHECK(dataset_to_csv(a) != dataset_to_csv(c));
  CHECK(a.rows.size() == 2000);
  CHECK(a.schema.has_mutable());

  // Default config: LR held-out accuracy above 0.70.
  const auto [train_set, test_set] = split_dataset(a, 0.8, 1);
  const Encoder enc(a.schema, uniform_costs(a.schema, 1.0, 1.0));
  TrainHyper h;
  h.seed = 2;
  const ModelParams m = train(train_set, enc, ArchSpec::parse("lr"), h);
  const double acc =
      accuracy(m, encode_rows(enc, test_set.rows), labels_of(test_set.rows));
  CHECK(acc > 0.70);

  SyntheticConfig bad;
  bad.rows = 0;
  CHECK_THROWS_AS(generate_synthetic(bad, 1), ValidationError);
}

TEST_CASE("masking") {
  const Schema immut = schema_of({categorical("a", 3, false), numeric("n", {-1, 0.5, 2}, false)});
  Dataset d0{immut, {example({0, 1}), example({2, 0}, 0)}};
  const Dataset m0 = mask_mutable(d0);
  CHECK(dataset_to_csv(m0) == dataset_to_csv(d0));

  const Schema mixed = schema_of({categorical("a", 3, true), numeric("n", {-1, 0.5, 2}, true),
                                  categorical("c", 2, false), numeric("m", {1, 2}, false)});
  Dataset d{mixed, {example({0, 2, 1, 0}), example({2, 0, 0, 1}, 0)}};
  const Dataset m = mask_mutable(d);
  CHECK(m.schema.features[0].categories.back() == kMaskedCategory);
  CHECK(m.schema.features[0].categories.size() == 4);
  for (std::size_t r = 0; r < d.rows.size(); ++r) {
    CHECK(m.rows[r].codes[0] == 3);
    CHECK(m.rows[r].codes[1] == 1);  // grid point nearest 0 is 0.5
    CHECK(m.rows[r].codes[2] == d.rows[r].codes[2]);
    CHECK(m.rows[r].codes[3] == d.rows[r].codes[3]);
    CHECK(m.rows[r].label == d.rows[r].label);
  }
  const Dataset mm = mask_mutable(m);
  CHECK(mm.schema.features[0].categories.size() == 4);
  CHECK(dataset_to_csv(mm) == dataset_to_csv(m));
}

TEST_CASE("split is deterministic and exhaustive") {
  const Dataset a = generate_synthetic(SyntheticConfig{}, 9);
  const auto [tr, te] = split_dataset(a, 0.8, 4);
  const auto [tr2, te2] = split_dataset(a, 0.8, 4);
  CHECK(tr.rows.size() == 1600);
  CHECK(te.rows.size() == 400);
  CHECK(dataset_to_csv(tr) == dataset_to_csv(tr2));
  CHECK(dataset_to_csv(te) == dataset_to_csv(te2));
}
