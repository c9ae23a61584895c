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

#ifndef TABADV_MODELS_HPP_
#define TABADV_MODELS_HPP_

#include <Eigen/Dense>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabadv/cost_model.hpp"
#include "tabadv/domain.hpp"

namespace tabadv {

enum class Arch { kLogistic, kMlp };

// "lr", "mlp" (default hidden sizes) or "mlp:16,8".
struct ArchSpec {
  Arch arch = Arch::kLogistic;
  std::vector<std::size_t> hidden;

  static ArchSpec parse(const std::string& text);
  std::string to_string() const;
};

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
};

// Differentiable binary classifier over encoded vectors. Inputs are
// standardized by a fixed affine map fitted on the training set before the
// first layer; the last layer has a single output squashed by a sigmoid.
struct ModelParams {
  ArchSpec arch;
  std::vector<Layer> layers;
  Eigen::VectorXd input_shift;
  Eigen::VectorXd input_scale;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  // Free-form provenance (adversarial-training config, etc.).
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t input_dim() const {
    return static_cast<std::size_t>(input_shift.size());
  }
  std::size_t parameter_count() const;
};

ModelParams init_model(const ArchSpec& arch, std::size_t input_dim,
                       double lambda, std::uint64_t seed);

double predict_logit(const ModelParams& model, std::span<const double> v);
double predict_score(const ModelParams& model, std::span<const double> v);
// 1 iff score > 1/2.
int predict_label(const ModelParams& model, std::span<const double> v);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Binary cross-entropy of the score against `y` and its exact gradient with
// respect to the encoded input.
LossAndGrad loss_and_grad_input(const ModelParams& model,
                                std::span<const double> v, int y);

// Gradient of mean batch loss + lambda * sum ||W||^2 with respect to all
// parameters, flattened in `flatten_params` order. Rows of `inputs` are
// encoded samples.
LossAndGrad grad_params(const ModelParams& model,
                        const Eigen::MatrixXd& inputs,
                        std::span<const int> labels);
double batch_objective(const ModelParams& model,
                       const Eigen::MatrixXd& inputs,
                       std::span<const int> labels);
// Gradient of the regularizer alone.
std::vector<double> regularizer_grad(const ModelParams& model);

// Layer by layer: weights (row-major), then bias.
std::vector<double> flatten_params(const ModelParams& model);
void unflatten_params(ModelParams& model, std::span<const double> flat);
// theta -= lr * grad.
void apply_step(ModelParams& model, std::span<const double> grad, double lr);

struct TrainHyper {
  double lambda = 1e-3;
  double learning_rate = 0.1;
  std::size_t epochs = 30;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  double clean_loss = 0.0;
  double adv_loss = 0.0;
  double clean_acc = 0.0;
};

// Hook for adversarial training: rewrites the rows of `batch` in place
// (each row is an encoded sample) before the parameter step. `rows` are the
// dataset indices of the batch rows.
using BatchPerturber =
    std::function<void(const ModelParams& model, std::span<const std::size_t>
                           rows, Eigen::MatrixXd& batch)>;
using EpochCallback = std::function<void(const EpochLog&)>;

// Mini-batch gradient descent with a constant learning rate. Deterministic
// for a fixed seed.
ModelParams train_encoded(const Eigen::MatrixXd& inputs,
                          std::span<const int> labels, const ArchSpec& arch,
                          const TrainHyper& hyper,
                          const BatchPerturber& perturb = {},
                          const EpochCallback& on_epoch = {});

ModelParams train(const Dataset& data, const Encoder& encoder,
                  const ArchSpec& arch, const TrainHyper& hyper,
                  const EpochCallback& on_epoch = {});

Eigen::MatrixXd encode_rows(const Encoder& encoder,
                            std::span<const Example> rows);
std::vector<int> labels_of(std::span<const Example> rows);
double accuracy(const ModelParams& model, const Eigen::MatrixXd& inputs,
                std::span<const int> labels);

nlohmann::json model_to_json(const ModelParams& model);
ModelParams model_from_json(const nlohmann::json& doc);
void save_model(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

// Query-counted scoring oracle over raw examples. Exposes scores and labels
// only.
class BlackBox {
 public:
  using Scorer = std::function<double(const Example&)>;
  explicit BlackBox(Scorer scorer) : scorer_(std::move(scorer)) {}

  double predict_score(const Example& x) const {
    queries_.fetch_add(1, std::memory_order_relaxed);
    return scorer_(x);
  }
  int predict_label(const Example& x) const {
    return predict_score(x) > 0.5 ? 1 : 0;
  }
  std::uint64_t queries() const {
    return queries_.load(std::memory_order_relaxed);
  }

 private:
  Scorer scorer_;
  mutable std::atomic<std::uint64_t> queries_{0};
};

// The model and encoder must outlive the returned oracle.
std::unique_ptr<BlackBox> wrap_blackbox(const ModelParams& model,
                                        const Encoder& encoder);
// Oracle for a model trained on `mask_mutable` data: inputs from the
// original schema are masked before scoring.
std::unique_ptr<BlackBox> wrap_masked_blackbox(const ModelParams& model,
                                               const Encoder& masked_encoder,
                                               const Schema& original);

}  // namespace tabadv

#endif  // TABADV_MODELS_HPP_
