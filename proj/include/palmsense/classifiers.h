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

// Binary infested / not-infested classifiers over combined feature images:
// logistic regression, linear SVM, CART decision tree, random forest and a
// small convolutional network, all trained deterministically from a seed.

#ifndef PALMSENSE_CLASSIFIERS_H_
#define PALMSENSE_CLASSIFIERS_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "palmsense/imaging.h"
#include "palmsense/matrix.h"

namespace palmsense {

enum class Label { kNotInfested = 0, kInfested = 1 };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view name);

struct FeatureVector {
  std::vector<double> values;
  std::string source;
  std::optional<Label> label;
};

// Channel-mean grayscale in [0, 1], average-pooled by factor x factor
// blocks. factor must divide both image dimensions.
RealMatrix pooled_grayscale(const RgbImage& image, std::size_t factor);

// pooled_grayscale flattened row-major and standardized to zero mean and
// unit variance (a constant image gives the zero vector).
FeatureVector vectorize(const CombinedImage& image, std::size_t downsample);

enum class ModelVariant {
  kLogistic = 0,
  kLinearSvm = 1,
  kDecisionTree = 2,
  kRandomForest = 3,
  kSmallCnn = 4,
};

std::string_view to_string(ModelVariant variant);
std::optional<ModelVariant> parse_model_variant(std::string_view name);

enum class Optimizer { kRmsProp, kSgd };

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-4;
  Optimizer optimizer = Optimizer::kRmsProp;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double svm_lambda = 1e-4;

  std::size_t max_depth = 16;
  std::size_t min_samples_split = 2;
  std::size_t n_trees = 100;
  // Features drawn per split; 0 means ceil(sqrt(d)).
  std::size_t feature_subsample = 0;
  bool bootstrap = true;

  void validate() const;
  std::string digest() const;
};

// s' = decay s + (1 - decay) g^2; theta' = theta - lr g / sqrt(s' + eps).
void rmsprop_step(std::span<double> params, std::span<const double> grads,
                  std::span<double> mean_square, double learning_rate,
                  double decay, double epsilon);

// rmsprop_step or plain gradient descent, per cfg.optimizer.
void optimizer_step(std::span<double> params, std::span<const double> grads,
                    std::span<double> mean_square, const TrainConfig& cfg);

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;

  double margin(std::span<const double> x) const;
};

struct TreeNode {
  // -1 marks a leaf.
  std::int64_t feature = -1;
  double threshold = 0.0;
  std::int64_t left = -1;   // taken when x[feature] <= threshold
  std::int64_t right = -1;
  double infested_fraction = 0.0;
  std::uint64_t n_samples = 0;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::size_t n_features = 0;

  std::size_t depth() const;
  const TreeNode& leaf_for(std::span<const double> x) const;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  std::size_t n_features = 0;
};

// Grayscale input pooled by 4, conv3x3x8 + ReLU, maxpool 2, conv3x3x16 +
// ReLU, maxpool 2, dense -> 2, softmax. Convolutions are zero-padded so the
// spatial size only changes at the pools.
struct CnnModel {
  static constexpr std::size_t kPool = 4;
  static constexpr std::size_t kConv1 = 8;
  static constexpr std::size_t kConv2 = 16;
  static constexpr std::size_t kClasses = 2;

  std::size_t in_height = 0;
  std::size_t in_width = 0;
  std::vector<double> conv1_w;  // [8][1][3][3]
  std::vector<double> conv1_b;  // [8]
  std::vector<double> conv2_w;  // [16][8][3][3]
  std::vector<double> conv2_b;  // [16]
  std::vector<double> dense_w;  // [2][flat]
  std::vector<double> dense_b;  // [2]

  std::size_t flat_size() const {
    return (in_height / 4) * (in_width / 4) * kConv2;
  }

  // Glorot-uniform weights, zero biases.
  static CnnModel initialize(std::size_t in_height, std::size_t in_width,
                             std::uint64_t seed);

  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
};

struct ModelParams {
  ModelVariant variant = ModelVariant::kLogistic;
  std::variant<LinearModel, DecisionTree, RandomForest, CnnModel> params;
  std::string train_config_digest;
  // Digest of the feature pipeline that produced the training inputs.
  std::string input_digest;

  std::size_t input_dim() const;
};

struct Prediction {
  Label label = Label::kNotInfested;
  // Probability-like score of the infested class.
  double score = 0.0;
};

// score >= 0.5 is infested; ties raise the alarm.
Label label_from_score(double score);

// Called after every epoch of the iterative trainers.
using EpochCallback = std::function<void(int epoch, const ModelParams& model)>;

struct LinearLossGrad {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};

// Mean binary cross-entropy of sigmoid(w.x + b) over `batch`.
LinearLossGrad logistic_loss_grad(const LinearModel& model,
                                  const std::vector<FeatureVector>& data,
                                  std::span<const std::size_t> batch);

// Mean hinge loss (labels +-1) plus lambda / 2 |w|^2.
LinearLossGrad hinge_loss_grad(const LinearModel& model,
                               const std::vector<FeatureVector>& data,
                               std::span<const std::size_t> batch,
                               double lambda);

ModelParams train_logistic(const std::vector<FeatureVector>& data,
                           const TrainConfig& cfg,
                           const EpochCallback& on_epoch = {});
ModelParams train_linear_svm(const std::vector<FeatureVector>& data,
                             const TrainConfig& cfg,
                             const EpochCallback& on_epoch = {});

double gini(std::size_t n_infested, std::size_t n_total);

ModelParams train_decision_tree(const std::vector<FeatureVector>& data,
                                const TrainConfig& cfg);
ModelParams train_random_forest(const std::vector<FeatureVector>& data,
                                const TrainConfig& cfg);

// CNN input tensor for one image: pooled grayscale, standardized.
RealMatrix cnn_input(const RgbImage& image);

struct CnnSample {
  RealMatrix input;
  Label label = Label::kNotInfested;
};

struct CnnLossGrad {
  double loss = 0.0;
  CnnModel grad;  // same shapes as the model
};

// Class probabilities of one input.
std::array<double, 2> cnn_forward(const CnnModel& model, const RealMatrix& input);

// Mean cross-entropy over `batch` and its gradient.
CnnLossGrad cnn_loss_grad(const CnnModel& model,
                          const std::vector<CnnSample>& data,
                          std::span<const std::size_t> batch);

ModelParams train_small_cnn(const std::vector<CombinedImage>& images,
                            const std::vector<Label>& labels,
                            const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {});
ModelParams train_small_cnn(const std::vector<CnnSample>& samples,
                            const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {});

// Shallow models take vectors; the CNN takes images.
Prediction predict(const ModelParams& model, const FeatureVector& x);
Prediction predict(const ModelParams& model, const CombinedImage& image);
Prediction predict(const ModelParams& model, const RealMatrix& cnn_tensor);

// Envelope: "PSMD", u32 format version, u32 variant tag, then
// length-prefixed digests and the variant payload. Integers are u64/i64 and
// reals IEEE-754 binary64, all little-endian.
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> encode_model(const ModelParams& model);
ModelParams decode_model(std::span<const std::uint8_t> bytes);
void save_model(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace palmsense

#endif  // PALMSENSE_CLASSIFIERS_H_
