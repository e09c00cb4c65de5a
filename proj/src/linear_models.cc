// Copyright 2026 The Palmsense Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "palmsense/classifiers.h"
#include "palmsense/digest.h"
#include "palmsense/error.h"
#include "palmsense/random.h"

namespace palmsense {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double target(const FeatureVector& v) {
  return *v.label == Label::kInfested ? 1.0 : 0.0;
}

void validate_training_data(const std::vector<FeatureVector>& data) {
  if (data.empty()) throw DegenerateDataError("no training examples");
  const std::size_t dim = data.front().values.size();
  if (dim == 0) throw ArgumentError("feature vectors are empty");
  std::size_t n_pos = 0;
  for (const auto& v : data) {
    if (v.values.size() != dim) {
      throw ArgumentError("feature vectors differ in dimension");
    }
    if (!v.label) throw ArgumentError("training example without a label");
    if (*v.label == Label::kInfested) ++n_pos;
    for (double x : v.values) {
      if (!std::isfinite(x)) throw ArgumentError("feature value not finite");
    }
  }
  if (n_pos == 0 || n_pos == data.size()) {
    throw DegenerateDataError(
        "training data must contain both infested and not_infested examples");
  }
}

using LossFn = LinearLossGrad (*)(const LinearModel&,
                                  const std::vector<FeatureVector>&,
                                  std::span<const std::size_t>, double);

LinearLossGrad logistic_adapter(const LinearModel& m,
                                const std::vector<FeatureVector>& d,
                                std::span<const std::size_t> b, double) {
  return logistic_loss_grad(m, d, b);
}

ModelParams train_linear(ModelVariant variant,
                         const std::vector<FeatureVector>& data,
                         const TrainConfig& cfg, const EpochCallback& on_epoch,
                         LossFn loss_fn) {
  cfg.validate();
  validate_training_data(data);
  const std::size_t dim = data.front().values.size();

  ModelParams model;
  model.variant = variant;
  model.train_config_digest = cfg.digest();
  model.params = LinearModel{std::vector<double>(dim, 0.0), 0.0};
  auto& lin = std::get<LinearModel>(model.params);

  // Weights and bias are optimized as one parameter vector [w..., b].
  std::vector<double> theta(dim + 1, 0.0);
  std::vector<double> grad(dim + 1, 0.0);
  std::vector<double> mean_square(dim + 1, 0.0);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start,
                                               end - start);
      const LinearLossGrad lg = loss_fn(lin, data, batch, cfg.svm_lambda);
      std::copy(lg.grad_w.begin(), lg.grad_w.end(), grad.begin());
      grad[dim] = lg.grad_b;
      optimizer_step(theta, grad, mean_square, cfg);
      std::copy(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(dim),
                lin.weights.begin());
      lin.bias = theta[dim];
    }
    if (on_epoch) on_epoch(epoch, model);
  }
  return model;
}

}  // namespace

std::string_view to_string(Label label) {
  return label == Label::kInfested ? "infested" : "not_infested";
}

std::optional<Label> parse_label(std::string_view name) {
  if (name == "infested") return Label::kInfested;
  if (name == "not_infested") return Label::kNotInfested;
  return std::nullopt;
}

std::string_view to_string(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::kLogistic:
      return "logistic";
    case ModelVariant::kLinearSvm:
      return "linear_svm";
    case ModelVariant::kDecisionTree:
      return "decision_tree";
    case ModelVariant::kRandomForest:
      return "random_forest";
    case ModelVariant::kSmallCnn:
      return "small_cnn";
  }
  return "unknown";
}

std::optional<ModelVariant> parse_model_variant(std::string_view name) {
  for (auto v : {ModelVariant::kLogistic, ModelVariant::kLinearSvm,
                 ModelVariant::kDecisionTree, ModelVariant::kRandomForest,
                 ModelVariant::kSmallCnn}) {
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

RealMatrix pooled_grayscale(const RgbImage& image, std::size_t factor) {
  if (factor == 0 || image.height() % factor != 0 ||
      image.width() % factor != 0) {
    throw ArgumentError("downsample factor " + std::to_string(factor) +
                        " does not divide the image size " +
                        std::to_string(image.height()) + "x" +
                        std::to_string(image.width()));
  }
  const std::size_t out_h = image.height() / factor;
  const std::size_t out_w = image.width() / factor;
  RealMatrix out(out_h, out_w, 0.0);
  const auto& px = image.bytes();
  for (std::size_t r = 0; r < image.height(); ++r) {
    for (std::size_t c = 0; c < image.width(); ++c) {
      const std::size_t i = (r * image.width() + c) * 3;
      const double gray = (px[i] + px[i + 1] + px[i + 2]) / (3.0 * 255.0);
      out(r / factor, c / factor) += gray;
    }
  }
  const double inv = 1.0 / static_cast<double>(factor * factor);
  for (double& v : out.data()) v *= inv;
  return out;
}

FeatureVector vectorize(const CombinedImage& image, std::size_t downsample) {
  const RealMatrix pooled = pooled_grayscale(image.pixels, downsample);
  FeatureVector v;
  v.source = image.clip_id;
  v.values = pooled.data();
  const double n = static_cast<double>(v.values.size());
  const double mean = std::accumulate(v.values.begin(), v.values.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v.values) var += (x - mean) * (x - mean);
  var /= n;
  const double sd = std::sqrt(var);
  for (double& x : v.values) x = sd > 1e-12 ? (x - mean) / sd : 0.0;
  return v;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ArgumentError("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
  if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) {
    throw ArgumentError("rmsprop_decay must be in [0, 1)");
  }
  if (!(rmsprop_epsilon > 0.0)) throw ArgumentError("rmsprop_epsilon must be > 0");
  if (batch_size < 1) throw ArgumentError("batch_size must be at least 1");
  if (!(svm_lambda >= 0.0)) throw ArgumentError("svm_lambda must be >= 0");
  if (min_samples_split < 2) {
    throw ArgumentError("min_samples_split must be at least 2");
  }
  if (n_trees < 1) throw ArgumentError("n_trees must be at least 1");
}

std::string TrainConfig::digest() const {
  Digest d;
  d.add("format", "palmsense-train-1")
      .add("epochs", epochs)
      .add("learning_rate", learning_rate)
      .add("optimizer", optimizer == Optimizer::kRmsProp ? "rmsprop" : "sgd")
      .add("rmsprop_decay", rmsprop_decay)
      .add("rmsprop_epsilon", rmsprop_epsilon)
      .add("batch_size", batch_size)
      .add("seed", static_cast<long long>(seed))
      .add("svm_lambda", svm_lambda)
      .add("max_depth", max_depth)
      .add("min_samples_split", min_samples_split)
      .add("n_trees", n_trees)
      .add("feature_subsample", feature_subsample)
      .add("bootstrap", bootstrap);
  return d.hex();
}

void rmsprop_step(std::span<double> params, std::span<const double> grads,
                  std::span<double> mean_square, double learning_rate,
                  double decay, double epsilon) {
  if (params.size() != grads.size() || params.size() != mean_square.size()) {
    throw ArgumentError("rmsprop: parameter, gradient and state shapes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    mean_square[i] = decay * mean_square[i] + (1.0 - decay) * g * g;
    params[i] -= learning_rate * g / std::sqrt(mean_square[i] + epsilon);
  }
}

void optimizer_step(std::span<double> params, std::span<const double> grads,
                    std::span<double> mean_square, const TrainConfig& cfg) {
  if (cfg.optimizer == Optimizer::kRmsProp) {
    rmsprop_step(params, grads, mean_square, cfg.learning_rate,
                 cfg.rmsprop_decay, cfg.rmsprop_epsilon);
    return;
  }
  if (params.size() != grads.size()) {
    throw ArgumentError("sgd: parameter and gradient shapes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= cfg.learning_rate * grads[i];
  }
}

double LinearModel::margin(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw ArgumentError("input dimension " + std::to_string(x.size()) +
                        " does not match model dimension " +
                        std::to_string(weights.size()));
  }
  double z = bias;
  for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
  return z;
}

LinearLossGrad logistic_loss_grad(const LinearModel& model,
                                  const std::vector<FeatureVector>& data,
                                  std::span<const std::size_t> batch) {
  LinearLossGrad out;
  out.grad_w.assign(model.weights.size(), 0.0);
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t idx : batch) {
    const auto& ex = data[idx];
    const double y = target(ex);
    const double z = model.margin(ex.values);
    // -[y log s + (1 - y) log(1 - s)] = softplus(z) - y z
    out.loss += (softplus(z) - y * z) * inv_n;
    const double r = (sigmoid(z) - y) * inv_n;
    for (std::size_t i = 0; i < ex.values.size(); ++i) {
      out.grad_w[i] += r * ex.values[i];
    }
    out.grad_b += r;
  }
  return out;
}

LinearLossGrad hinge_loss_grad(const LinearModel& model,
                               const std::vector<FeatureVector>& data,
                               std::span<const std::size_t> batch,
                               double lambda) {
  LinearLossGrad out;
  out.grad_w.assign(model.weights.size(), 0.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    sq += model.weights[i] * model.weights[i];
    out.grad_w[i] = lambda * model.weights[i];
  }
  out.loss = 0.5 * lambda * sq;
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t idx : batch) {
    const auto& ex = data[idx];
    const double y = *ex.label == Label::kInfested ? 1.0 : -1.0;
    const double slack = 1.0 - y * model.margin(ex.values);
    if (slack > 0.0) {
      out.loss += slack * inv_n;
      for (std::size_t i = 0; i < ex.values.size(); ++i) {
        out.grad_w[i] -= y * ex.values[i] * inv_n;
      }
      out.grad_b -= y * inv_n;
    }
  }
  return out;
}

ModelParams train_logistic(const std::vector<FeatureVector>& data,
                           const TrainConfig& cfg,
                           const EpochCallback& on_epoch) {
  return train_linear(ModelVariant::kLogistic, data, cfg, on_epoch,
                      &logistic_adapter);
}

ModelParams train_linear_svm(const std::vector<FeatureVector>& data,
                             const TrainConfig& cfg,
                             const EpochCallback& on_epoch) {
  return train_linear(ModelVariant::kLinearSvm, data, cfg, on_epoch,
                      &hinge_loss_grad);
}

Label label_from_score(double score) {
  return score >= 0.5 ? Label::kInfested : Label::kNotInfested;
}

std::size_t ModelParams::input_dim() const {
  return std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          return p.weights.size();
        } else if constexpr (std::is_same_v<T, CnnModel>) {
          return p.in_height * p.in_width;
        } else {
          return p.n_features;
        }
      },
      params);
}

Prediction predict(const ModelParams& model, const FeatureVector& x) {
  if (model.variant == ModelVariant::kSmallCnn) {
    throw ArgumentError("the CNN model takes images, not feature vectors");
  }
  if (x.values.size() != model.input_dim()) {
    throw ArgumentError("input dimension " + std::to_string(x.values.size()) +
                        " does not match model dimension " +
                        std::to_string(model.input_dim()));
  }
  double score = 0.0;
  switch (model.variant) {
    case ModelVariant::kLogistic:
    case ModelVariant::kLinearSvm:
      score = sigmoid(std::get<LinearModel>(model.params).margin(x.values));
      break;
    case ModelVariant::kDecisionTree:
      score = std::get<DecisionTree>(model.params)
                  .leaf_for(x.values)
                  .infested_fraction;
      break;
    case ModelVariant::kRandomForest: {
      const auto& forest = std::get<RandomForest>(model.params);
      std::size_t votes = 0;
      for (const auto& tree : forest.trees) {
        if (label_from_score(tree.leaf_for(x.values).infested_fraction) ==
            Label::kInfested) {
          ++votes;
        }
      }
      score = static_cast<double>(votes) /
              static_cast<double>(forest.trees.size());
      break;
    }
    case ModelVariant::kSmallCnn:
      break;
  }
  return {label_from_score(score), score};
}

}  // namespace palmsense
