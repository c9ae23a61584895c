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

#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "tabadv/models.hpp"
#include "test_support.hpp"

using namespace tabadv;
using namespace tabadv::testing;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double bce_logit(double z, int y) {
  const double m = y == 1 ? -z : z;
  return std::max(m, 0.0) + std::log1p(std::exp(-std::abs(m)));
}

std::vector<double> random_input(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  for (double& x : v) x = rng.normal();
  return v;
}

const char* const kArchs[] = {"lr", "mlp:8", "mlp:6,5"};

}  // namespace

TEST_CASE("scores") {
  const ModelParams zero = init_model(ArchSpec::parse("lr"), 3, 0.0, 1);
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const auto v = random_input(rng, 3);
    CHECK(predict_score(zero, v) == 0.5);
    CHECK(predict_label(zero, v) == 0);
  }

  ModelParams lr = random_model(rng, ArchSpec::parse("lr"), 4);
  for (int t = 0; t < 200; ++t) {
    const auto v = random_input(rng, 4);
    double z = lr.layers[0].bias(0);
    for (std::size_t k = 0; k < 4; ++k) {
      z += lr.layers[0].weight(0, static_cast<Eigen::Index>(k)) *
           (v[k] - lr.input_shift(static_cast<Eigen::Index>(k))) *
           lr.input_scale(static_cast<Eigen::Index>(k));
    }
    CHECK(std::abs(predict_score(lr, v) - sigmoid(z)) <= 1e-12);
    CHECK(predict_label(lr, v) == (z > 0.0 ? 1 : 0));
  }

  const ModelParams mlp = random_model(rng, ArchSpec::parse("mlp:16,8"), 6);
  for (int t = 0; t < 10000; ++t) {
    const double s = predict_score(mlp, random_input(rng, 6));
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
  CHECK_THROWS(predict_score(mlp, std::vector<double>(5, 0.0)));

  // Strict threshold: a bias that pins the score to 0.9.
  ModelParams hi = init_model(ArchSpec::parse("lr"), 2, 0.0, 1);
  hi.layers[0].bias(0) = std::log(9.0);
  CHECK(predict_score(hi, std::vector<double>{0, 0}) == doctest::Approx(0.9));
  CHECK(predict_label(hi, std::vector<double>{0, 0}) == 1);
}

TEST_CASE("architecture shapes and parsing") {
  const ModelParams m = init_model(ArchSpec::parse("mlp:16,8"), 10, 0.0, 3);
  REQUIRE(m.layers.size() == 3);
  CHECK(m.layers[0].weight.rows() == 16);
  CHECK(m.layers[0].weight.cols() == 10);
  CHECK(m.layers[1].weight.rows() == 8);
  CHECK(m.layers[1].weight.cols() == 16);
  CHECK(m.layers[2].weight.rows() == 1);
  CHECK(m.layers[2].bias.size() == 1);
  CHECK(m.parameter_count() == 16 * 10 + 16 + 8 * 16 + 8 + 8 + 1);
  CHECK(ArchSpec::parse("mlp").hidden == std::vector<std::size_t>{16});
  CHECK(ArchSpec::parse("mlp:16,8").to_string() == "mlp:16,8");
  CHECK_THROWS_AS(ArchSpec::parse("svm"), ValidationError);
  CHECK_THROWS_AS(init_model(ArchSpec::parse("lr"), 0, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(init_model(ArchSpec::parse("lr"), 2, -1.0, 1), ValidationError);
}

TEST_CASE("input gradient") {
  Rng rng(4);
  for (const char* name : kArchs) {
    const ArchSpec arch = ArchSpec::parse(name);
    for (int probe = 0; probe < 100; ++probe) {
      const std::size_t d = 2 + rng.below(5);
      const ModelParams m = random_model(rng, arch, d);
      const auto v = random_input(rng, d);
      const int y = static_cast<int>(rng.below(2));
      const LossAndGrad g = loss_and_grad_input(m, v, y);
      CHECK(g.loss == doctest::Approx(bce_logit(predict_logit(m, v), y)).epsilon(1e-12));
      for (std::size_t k = 0; k < d; ++k) {
        auto up = v;
        auto dn = v;
        up[k] += 1e-5;
        dn[k] -= 1e-5;
        const double fd = (loss_and_grad_input(m, up, y).loss -
                           loss_and_grad_input(m, dn, y).loss) / 2e-5;
        CHECK(rel_err(g.grad[k], fd) <= 1e-4);
      }
    }
  }

  // Closed form for logistic regression (unit standardization).
  ModelParams lr = init_model(ArchSpec::parse("lr"), 3, 0.0, 1);
  lr.layers[0].weight << 0.5, -1.0, 2.0;
  lr.layers[0].bias(0) = 0.25;
  const std::vector<double> v{1.0, 2.0, -0.5};
  const double p = sigmoid(0.5 - 2.0 - 1.0 + 0.25);
  const LossAndGrad g = loss_and_grad_input(lr, v, 1);
  CHECK(g.grad[0] == doctest::Approx((p - 1.0) * 0.5).epsilon(1e-12));
  CHECK(g.grad[1] == doctest::Approx((p - 1.0) * -1.0).epsilon(1e-12));
  CHECK(g.grad[2] == doctest::Approx((p - 1.0) * 2.0).epsilon(1e-12));

  // Confident and correct means small loss.
  lr.layers[0].bias(0) = 10.0;
  CHECK(loss_and_grad_input(lr, std::vector<double>{0, 0, 0}, 1).loss < 0.1);
}

TEST_CASE("parameter gradient") {
  Rng rng(6);
  for (const char* name : kArchs) {
    const ArchSpec arch = ArchSpec::parse(name);
    for (int probe = 0; probe < 100; ++probe) {
      const std::size_t d = 2 + rng.below(4);
      const std::size_t n = 1 + rng.below(4);
      ModelParams m = random_model(rng, arch, d, rng.uniform(0.0, 0.1));
      Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
      std::vector<int> y(n);
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
          x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rng.normal();
        }
        y[r] = static_cast<int>(rng.below(2));
      }
      const LossAndGrad g = grad_params(m, x, y);
      CHECK(g.loss == doctest::Approx(batch_objective(m, x, y)).epsilon(1e-12));
      const std::vector<double> flat = flatten_params(m);
      REQUIRE(g.grad.size() == flat.size());
      // A random subset of coordinates keeps the test quick.
      for (int k = 0; k < 6; ++k) {
        const std::size_t j = rng.below(flat.size());
        auto up = flat;
        auto dn = flat;
        up[j] += 1e-5;
        dn[j] -= 1e-5;
        ModelParams mu = m;
        ModelParams md = m;
        unflatten_params(mu, up);
        unflatten_params(md, dn);
        const double fd = (batch_objective(mu, x, y) - batch_objective(md, x, y)) / 2e-5;
        CHECK(rel_err(g.grad[j], fd) <= 1e-4);
      }
    }
  }
}

TEST_CASE("regularizer gradient and zero step") {
  Rng rng(9);
  ModelParams m = random_model(rng, ArchSpec::parse("mlp:4"), 3, 0.3);
  const std::vector<double> rg = regularizer_grad(m);
  const std::vector<double> flat = flatten_params(m);
  REQUIRE(rg.size() == flat.size());
  // Flattened order: each layer's weight (row-major) then bias.
  std::size_t k = 0;
  for (const Layer& l : m.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c, ++k) {
        CHECK(rg[k] == doctest::Approx(2.0 * 0.3 * l.weight(r, c)).epsilon(1e-12));
      }
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r, ++k) CHECK(rg[k] == 0.0);
  }

  Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 3);
  const std::vector<int> y{0, 1, 1, 0, 1};
  const LossAndGrad g = grad_params(m, x, y);
  const ModelParams before = m;
  apply_step(m, g.grad, 0.0);
  CHECK(flatten_params(m) == flatten_params(before));
}

TEST_CASE("training") {
  // Four separable points.
  Eigen::MatrixXd x(4, 2);
  x << -2, -1, -1, -2, 1, 2, 2, 1;
  const std::vector<int> y{0, 0, 1, 1};
  TrainHyper h;
  h.epochs = 200;
  h.batch_size = 2;
  h.lambda = 0.0;
  h.seed = 5;
  for (const char* name : {"lr", "mlp"}) {
    const ModelParams m = train_encoded(x, y, ArchSpec::parse(name), h);
    CHECK(accuracy(m, x, y) == 1.0);
    const ModelParams again = train_encoded(x, y, ArchSpec::parse(name), h);
    CHECK(flatten_params(m) == flatten_params(again));
  }

  // Loss decreases over epochs on the default synthetic data.
  const Dataset data = generate_synthetic(SyntheticConfig{}, 1);
  const Encoder enc(data.schema, synthetic_costs(data.schema));
  std::vector<double> losses;
  TrainHyper dh;
  dh.epochs = 10;
  dh.seed = 1;
  train(data, enc, ArchSpec::parse("lr"), dh,
        [&](const EpochLog& log) { losses.push_back(log.clean_loss); });
  REQUIRE(losses.size() == 10);
  CHECK(losses.back() < losses.front());

  const std::vector<int> same{1, 1, 1, 1};
  CHECK_THROWS_AS(train_encoded(x, same, ArchSpec::parse("lr"), h), ValidationError);
  CHECK_THROWS_AS(train_encoded(Eigen::MatrixXd(0, 2), std::vector<int>{},
                                ArchSpec::parse("lr"), h),
                  ValidationError);

  TrainHyper wild = h;
  wild.learning_rate = 1e300;
  wild.lambda = 1e300;
  try {
    train_encoded(x, y, ArchSpec::parse("lr"), wild);
    FAIL("non-finite loss not reported");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("serialization round trip") {
  Rng rng(12);
  ModelParams m = random_model(rng, ArchSpec::parse("mlp:5,3"), 4, 0.01);
  m.metadata["note"] = "x";
  const ModelParams back = model_from_json(model_to_json(m));
  CHECK(back.arch.to_string() == "mlp:5,3");
  CHECK(flatten_params(back) == flatten_params(m));
  CHECK(back.input_shift == m.input_shift);
  CHECK(back.input_scale == m.input_scale);
  CHECK(back.metadata == m.metadata);

  const auto path = std::filesystem::temp_directory_path() / "tabadv_model_rt.json";
  save_model(m, path);
  const ModelParams loaded = load_model(path);
  std::filesystem::remove(path);
  for (int t = 0; t < 50; ++t) {
    const auto v = random_input(rng, 4);
    CHECK(predict_score(loaded, v) == predict_score(m, v));
  }
}

TEST_CASE("black-box wrapper counts queries") {
  const Schema s = schema_of({categorical("a", 3, true), numeric("n", {0, 1, 2}, true)});
  const Encoder enc(s, uniform_costs(s, 1.0, 1.0));
  Rng rng(3);
  const ModelParams m = random_model(rng, ArchSpec::parse("mlp:4"), enc.dim());
  const auto box = wrap_blackbox(m, enc);
  CHECK(box->queries() == 0);
  for (int t = 0; t < 100; ++t) {
    const Example x = random_example(rng, s, 1);
    CHECK(box->predict_score(x) == predict_score(m, enc.encode(x)));
  }
  CHECK(box->queries() == 100);
  box->predict_label(example({0, 0}));
  CHECK(box->queries() == 101);
}
