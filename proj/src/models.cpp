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

#include "tabadv/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tabadv/rng.hpp"

namespace tabadv {

using nlohmann::json;

namespace {

constexpr std::size_t kDefaultHidden = 16;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double bce_from_logit(double z, int y) {
  return y == 1 ? softplus(-z) : softplus(z);
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v == 0) {
      throw ValidationError("invalid hidden layer size '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

ArchSpec ArchSpec::parse(const std::string& text) {
  ArchSpec spec;
  if (text == "lr" || text == "logistic") return spec;
  if (text == "mlp") {
    spec.arch = Arch::kMlp;
    spec.hidden = {kDefaultHidden};
    return spec;
  }
  if (text.rfind("mlp:", 0) == 0) {
    spec.arch = Arch::kMlp;
    spec.hidden = parse_sizes(text.substr(4));
    if (spec.hidden.empty()) {
      throw ValidationError("mlp needs at least one hidden layer");
    }
    return spec;
  }
  throw ValidationError("unknown architecture '" + text + "'");
}

std::string ArchSpec::to_string() const {
  if (arch == Arch::kLogistic) return "lr";
  std::string s = "mlp:";
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(hidden[i]);
  }
  return s;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  }
  return n;
}

ModelParams init_model(const ArchSpec& arch, std::size_t input_dim,
                       double lambda, std::uint64_t seed) {
  if (input_dim == 0) throw ValidationError("model input dimension is zero");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  ModelParams m;
  m.arch = arch;
  m.lambda = lambda;
  m.seed = seed;
  m.input_shift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(input_dim));
  m.input_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(input_dim));
  std::vector<std::size_t> sizes{input_dim};
  if (arch.arch == Arch::kMlp) {
    sizes.insert(sizes.end(), arch.hidden.begin(), arch.hidden.end());
  }
  sizes.push_back(1);
  Rng rng(derive_seed(seed, 0));
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes[l]);
    const auto out = static_cast<Eigen::Index>(sizes[l + 1]);
    Layer layer{Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
    if (arch.arch == Arch::kMlp) {
      // He initialization for rectifier layers.
      const double sd = std::sqrt(2.0 / static_cast<double>(in));
      for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = sd * rng.normal();
      }
    }
    m.layers.push_back(std::move(layer));
  }
  return m;
}

namespace {

void check_dim(const ModelParams& model, std::size_t n) {
  if (n != model.input_dim()) {
    throw std::invalid_argument("input dimension " + std::to_string(n) +
                                " != model dimension " +
                                std::to_string(model.input_dim()));
  }
}

Eigen::VectorXd standardize(const ModelParams& model,
                            std::span<const double> v) {
  Eigen::Map<const Eigen::VectorXd> x(v.data(),
                                      static_cast<Eigen::Index>(v.size()));
  return (x - model.input_shift).cwiseProduct(model.input_scale);
}

}  // namespace

double predict_logit(const ModelParams& model, std::span<const double> v) {
  check_dim(model, v.size());
  Eigen::VectorXd a = standardize(model, v);
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const Layer& layer = model.layers[l];
    Eigen::VectorXd z = layer.weight * a + layer.bias;
    if (l + 1 < model.layers.size()) {
      a = z.cwiseMax(0.0);
    } else {
      return z(0);
    }
  }
  return 0.0;
}

double predict_score(const ModelParams& model, std::span<const double> v) {
  // Keep the score strictly inside (0, 1) when the sigmoid saturates.
  return std::clamp(sigmoid(predict_logit(model, v)),
                    std::numeric_limits<double>::denorm_min(),
                    std::nextafter(1.0, 0.0));
}

int predict_label(const ModelParams& model, std::span<const double> v) {
  return predict_score(model, v) > 0.5 ? 1 : 0;
}

LossAndGrad loss_and_grad_input(const ModelParams& model,
                                std::span<const double> v, int y) {
  check_dim(model, v.size());
  std::vector<Eigen::VectorXd> pre;  // pre-activations of hidden layers
  Eigen::VectorXd a = standardize(model, v);
  double logit = 0.0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const Layer& layer = model.layers[l];
    Eigen::VectorXd z = layer.weight * a + layer.bias;
    if (l + 1 < model.layers.size()) {
      a = z.cwiseMax(0.0);
      pre.push_back(std::move(z));
    } else {
      logit = z(0);
    }
  }
  LossAndGrad out;
  out.loss = bce_from_logit(logit, y);
  Eigen::VectorXd g = Eigen::VectorXd::Constant(1, sigmoid(logit) - y);
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    g = model.layers[l].weight.transpose() * g;
    if (l > 0) {
      const Eigen::VectorXd& z = pre[l - 1];
      for (Eigen::Index k = 0; k < g.size(); ++k) {
        if (z(k) <= 0.0) g(k) = 0.0;
      }
    }
  }
  g = g.cwiseProduct(model.input_scale);
  out.grad.assign(g.data(), g.data() + g.size());
  return out;
}

std::vector<double> flatten_params(const ModelParams& model) {
  std::vector<double> flat;
  flat.reserve(model.parameter_count());
  for (const Layer& l : model.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        flat.push_back(l.weight(r, c));
      }
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias(r));
  }
  return flat;
}

void unflatten_params(ModelParams& model, std::span<const double> flat) {
  if (flat.size() != model.parameter_count()) {
    throw std::invalid_argument("parameter vector has wrong size");
  }
  std::size_t k = 0;
  for (Layer& l : model.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[k++];
  }
}

void apply_step(ModelParams& model, std::span<const double> grad, double lr) {
  if (grad.size() != model.parameter_count()) {
    throw std::invalid_argument("gradient has wrong size");
  }
  std::size_t k = 0;
  for (Layer& l : model.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        l.weight(r, c) -= lr * grad[k++];
      }
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) -= lr * grad[k++];
  }
}

std::vector<double> regularizer_grad(const ModelParams& model) {
  std::vector<double> g;
  g.reserve(model.parameter_count());
  for (const Layer& l : model.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        g.push_back(2.0 * model.lambda * l.weight(r, c));
      }
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) g.push_back(0.0);
  }
  return g;
}

namespace {

struct Forward {
  Eigen::MatrixXd input;                // standardized, n x d
  std::vector<Eigen::MatrixXd> hidden;  // post-activation, n x h
  Eigen::VectorXd logits;
};

Forward forward_batch(const ModelParams& model, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != model.input_dim()) {
    throw std::invalid_argument("batch dimension mismatch");
  }
  Forward f;
  f.input = (x.rowwise() - model.input_shift.transpose()) *
            model.input_scale.asDiagonal();
  const Eigen::MatrixXd* a = &f.input;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const Layer& layer = model.layers[l];
    Eigen::MatrixXd z = (*a) * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (l + 1 < model.layers.size()) {
      f.hidden.push_back(z.cwiseMax(0.0));
      a = &f.hidden.back();
    } else {
      f.logits = z.col(0);
    }
  }
  return f;
}

double regularizer(const ModelParams& model) {
  double r = 0.0;
  for (const Layer& l : model.layers) r += l.weight.squaredNorm();
  return model.lambda * r;
}

}  // namespace

double batch_objective(const ModelParams& model, const Eigen::MatrixXd& inputs,
                       std::span<const int> labels) {
  const Forward f = forward_batch(model, inputs);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < f.logits.size(); ++i) {
    loss += bce_from_logit(f.logits(i), labels[static_cast<std::size_t>(i)]);
  }
  return loss / static_cast<double>(inputs.rows()) + regularizer(model);
}

LossAndGrad grad_params(const ModelParams& model, const Eigen::MatrixXd& inputs,
                        std::span<const int> labels) {
  const Eigen::Index n = inputs.rows();
  if (n == 0) throw std::invalid_argument("empty batch");
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw std::invalid_argument("labels do not match batch");
  }
  const Forward f = forward_batch(model, inputs);
  LossAndGrad out;
  Eigen::MatrixXd g(n, 1);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    loss += bce_from_logit(f.logits(i), y);
    g(i, 0) = (sigmoid(f.logits(i)) - y) / static_cast<double>(n);
  }
  out.loss = loss / static_cast<double>(n) + regularizer(model);

  std::vector<Layer> grads(model.layers.size());
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const Eigen::MatrixXd& a = l == 0 ? f.input : f.hidden[l - 1];
    grads[l].weight = g.transpose() * a +
                      2.0 * model.lambda * model.layers[l].weight;
    grads[l].bias = g.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = g * model.layers[l].weight;
      const Eigen::MatrixXd& act = f.hidden[l - 1];
      g = (act.array() > 0.0).select(back, 0.0);
    }
  }
  out.grad.reserve(model.parameter_count());
  for (const Layer& l : grads) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        out.grad.push_back(l.weight(r, c));
      }
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.grad.push_back(l.bias(r));
  }
  return out;
}

Eigen::MatrixXd encode_rows(const Encoder& encoder,
                            std::span<const Example> rows) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(
      static_cast<Eigen::Index>(rows.size()),
      static_cast<Eigen::Index>(encoder.dim()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    encoder.encode_into(rows[r],
                        std::span<double>(m.row(static_cast<Eigen::Index>(r)).data(),
                                          encoder.dim()));
  }
  return m;
}

std::vector<int> labels_of(std::span<const Example> rows) {
  std::vector<int> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) y[i] = rows[i].label;
  return y;
}

double accuracy(const ModelParams& model, const Eigen::MatrixXd& inputs,
                std::span<const int> labels) {
  if (inputs.rows() == 0) return 0.0;
  const Forward f = forward_batch(model, inputs);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < f.logits.size(); ++i) {
    const int pred = sigmoid(f.logits(i)) > 0.5 ? 1 : 0;
    correct += pred == labels[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(correct) / static_cast<double>(inputs.rows());
}

ModelParams train_encoded(const Eigen::MatrixXd& inputs,
                          std::span<const int> labels, const ArchSpec& arch,
                          const TrainHyper& hyper,
                          const BatchPerturber& perturb,
                          const EpochCallback& on_epoch) {
  const auto n = static_cast<std::size_t>(inputs.rows());
  if (n == 0) throw ValidationError("training set is empty");
  if (labels.size() != n) throw ValidationError("labels do not match inputs");
  const auto positives = static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == n) {
    throw ValidationError("training set contains a single class");
  }
  if (hyper.batch_size == 0) throw ValidationError("batch size must be > 0");
  if (!(hyper.learning_rate >= 0.0)) {
    throw ValidationError("learning rate must be >= 0");
  }

  ModelParams model = init_model(arch, static_cast<std::size_t>(inputs.cols()),
                                 hyper.lambda, hyper.seed);
  model.input_shift = inputs.colwise().mean().transpose();
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    const double var =
        (inputs.col(c).array() - model.input_shift(c)).square().mean();
    model.input_scale(c) = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }

  Rng rng(derive_seed(hyper.seed, 1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXd batch;
  std::vector<int> batch_labels;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    double adv_loss = 0.0;
    for (std::size_t start = 0; start < n; start += hyper.batch_size) {
      const std::size_t end = std::min(n, start + hyper.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      batch.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
      batch_labels.resize(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        batch.row(static_cast<Eigen::Index>(r)) =
            inputs.row(static_cast<Eigen::Index>(rows[r]));
        batch_labels[r] = labels[rows[r]];
      }
      if (perturb) perturb(model, rows, batch);
      const LossAndGrad g = grad_params(model, batch, batch_labels);
      if (!std::isfinite(g.loss)) {
        throw std::runtime_error("non-finite training loss at epoch " +
                                 std::to_string(epoch));
      }
      adv_loss += g.loss * static_cast<double>(rows.size());
      apply_step(model, g.grad, hyper.learning_rate);
    }
    if (on_epoch) {
      EpochLog log;
      log.epoch = epoch;
      log.adv_loss = adv_loss / static_cast<double>(n);
      log.clean_loss = batch_objective(model, inputs, labels);
      log.clean_acc = accuracy(model, inputs, labels);
      on_epoch(log);
    }
  }
  return model;
}

ModelParams train(const Dataset& data, const Encoder& encoder,
                  const ArchSpec& arch, const TrainHyper& hyper,
                  const EpochCallback& on_epoch) {
  const Eigen::MatrixXd x = encode_rows(encoder, data.rows);
  const std::vector<int> y = labels_of(data.rows);
  return train_encoded(x, y, arch, hyper, {}, on_epoch);
}

json model_to_json(const ModelParams& model) {
  json layers = json::array();
  for (const Layer& l : model.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    }
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"weight", w},
                      {"bias", std::vector<double>(l.bias.data(),
                                                   l.bias.data() + l.bias.size())}});
  }
  return {{"arch", model.arch.to_string()},
          {"layers", layers},
          {"input_shift", std::vector<double>(model.input_shift.data(),
                                              model.input_shift.data() +
                                                  model.input_shift.size())},
          {"input_scale", std::vector<double>(model.input_scale.data(),
                                              model.input_scale.data() +
                                                  model.input_scale.size())},
          {"lambda", model.lambda},
          {"seed", model.seed},
          {"metadata", model.metadata}};
}

ModelParams model_from_json(const json& doc) {
  ModelParams m;
  try {
    m.arch = ArchSpec::parse(doc.at("arch").get<std::string>());
    m.lambda = doc.at("lambda").get<double>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.metadata = doc.value("metadata", json::object());
    const auto shift = doc.at("input_shift").get<std::vector<double>>();
    const auto scale = doc.at("input_scale").get<std::vector<double>>();
    if (shift.size() != scale.size() || shift.empty()) {
      throw ValidationError("model: input_shift/input_scale size mismatch");
    }
    m.input_shift = Eigen::Map<const Eigen::VectorXd>(
        shift.data(), static_cast<Eigen::Index>(shift.size()));
    m.input_scale = Eigen::Map<const Eigen::VectorXd>(
        scale.data(), static_cast<Eigen::Index>(scale.size()));
    auto in = static_cast<Eigen::Index>(shift.size());
    for (const json& jl : doc.at("layers")) {
      const auto rows = jl.at("rows").get<Eigen::Index>();
      const auto cols = jl.at("cols").get<Eigen::Index>();
      const auto w = jl.at("weight").get<std::vector<double>>();
      const auto b = jl.at("bias").get<std::vector<double>>();
      if (cols != in || static_cast<Eigen::Index>(w.size()) != rows * cols ||
          static_cast<Eigen::Index>(b.size()) != rows) {
        throw ValidationError("model: layer shapes do not chain");
      }
      Layer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) l.weight(r, c) = w[k++];
        l.bias(r) = b[static_cast<std::size_t>(r)];
      }
      if (!l.weight.allFinite() || !l.bias.allFinite()) {
        throw ValidationError("model: non-finite parameters");
      }
      m.layers.push_back(std::move(l));
      in = rows;
    }
    if (in != 1) throw ValidationError("model: last layer must have 1 output");
    const std::size_t expected_layers =
        m.arch.arch == Arch::kLogistic ? 1 : m.arch.hidden.size() + 1;
    if (m.layers.size() != expected_layers) {
      throw ValidationError("model: layer count does not match architecture");
    }
    for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) {
      if (static_cast<std::size_t>(m.layers[l].weight.rows()) !=
          m.arch.hidden[l]) {
        throw ValidationError("model: hidden size does not match architecture");
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model parse error: ") + e.what());
  }
  return m;
}

void save_model(const ModelParams& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << model_to_json(model).dump(1) << '\n';
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  try {
    return model_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::unique_ptr<BlackBox> wrap_blackbox(const ModelParams& model,
                                        const Encoder& encoder) {
  check_dim(model, encoder.dim());
  return std::make_unique<BlackBox>([&model, &encoder](const Example& x) {
    thread_local EncodedVector buf;
    buf.resize(encoder.dim());
    encoder.encode_into(x, buf);
    return predict_score(model, buf);
  });
}

std::unique_ptr<BlackBox> wrap_masked_blackbox(const ModelParams& model,
                                               const Encoder& masked_encoder,
                                               const Schema& original) {
  check_dim(model, masked_encoder.dim());
  return std::make_unique<BlackBox>(
      [&model, &masked_encoder, &original](const Example& x) {
        const Example masked =
            mask_example(masked_encoder.schema(), original, x);
        return predict_score(model, masked_encoder.encode(masked));
      });
}

}  // namespace tabadv
