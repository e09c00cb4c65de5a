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

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <doctest.h>

#include "oracles.h"
#include "palmsense/classifiers.h"
#include "palmsense/error.h"

namespace palmsense {
namespace {

FeatureVector example(std::vector<double> v, Label label) {
  FeatureVector f;
  f.values = std::move(v);
  f.label = label;
  return f;
}

// Two Gaussian blobs centered at +mu and -mu in every coordinate.
std::vector<FeatureVector> blobs(std::uint64_t seed, std::size_t per_class,
                                 std::size_t dim, double mu) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<FeatureVector> out;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const bool pos = i % 2 == 0;
    std::vector<double> v(dim);
    for (auto& x : v) x = (pos ? mu : -mu) + noise(gen);
    out.push_back(example(std::move(v), pos ? Label::kInfested : Label::kNotInfested));
  }
  return out;
}

double accuracy(const ModelParams& model, const std::vector<FeatureVector>& data) {
  std::size_t ok = 0;
  for (const auto& x : data) ok += predict(model, x).label == *x.label ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

CombinedImage constant_image(std::size_t n_features, std::uint8_t v) {
  CombinedImage img;
  img.pixels = RgbImage(kImageSize, kImageSize * n_features);
  std::fill(img.pixels.bytes().begin(), img.pixels.bytes().end(), v);
  img.order.assign(n_features, FeatureKind::kMfcc);
  img.clip_id = "c";
  return img;
}

TrainConfig fast_config() {
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.epochs = 50;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("label and variant names") {
  CHECK(to_string(Label::kInfested) == "infested");
  CHECK(parse_label("not_infested") == Label::kNotInfested);
  CHECK_FALSE(parse_label("clean").has_value());
  for (auto v : {ModelVariant::kLogistic, ModelVariant::kLinearSvm, ModelVariant::kDecisionTree,
                 ModelVariant::kRandomForest, ModelVariant::kSmallCnn}) {
    CHECK(parse_model_variant(to_string(v)) == v);
  }
  CHECK(label_from_score(0.5) == Label::kInfested);
  CHECK(label_from_score(0.4999) == Label::kNotInfested);
}

TEST_CASE("rmsprop step matches the update rule") {
  std::vector<double> theta = {1.0, -2.0, 0.5};
  const std::vector<double> g = {0.1, -0.3, 0.0};
  std::vector<double> s = {0.0, 0.01, 0.2};
  const double lr = 0.01, rho = 0.9, eps = 1e-8;
  std::vector<double> want_theta = theta, want_s = s;
  for (std::size_t i = 0; i < 3; ++i) {
    want_s[i] = rho * s[i] + (1 - rho) * g[i] * g[i];
    want_theta[i] -= lr * g[i] / std::sqrt(want_s[i] + eps);
  }
  rmsprop_step(theta, g, s, lr, rho, eps);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(theta[i] == doctest::Approx(want_theta[i]).epsilon(1e-15));
    CHECK(s[i] == doctest::Approx(want_s[i]).epsilon(1e-15));
  }
  // Zero gradient leaves the parameter alone.
  CHECK(theta[2] == 0.5);
  // First step from zero state moves by lr / sqrt(1 - rho) in the sign of -g.
  std::vector<double> p = {0.0};
  std::vector<double> ms = {0.0};
  rmsprop_step(p, std::vector<double>{5.0}, ms, 0.001, 0.9, 0.0);
  CHECK(p[0] == doctest::Approx(-0.001 / std::sqrt(0.1)));
  CHECK_THROWS_AS(rmsprop_step(p, std::vector<double>{1.0, 2.0}, ms, 0.1, 0.9, 1e-8),
                  ArgumentError);
}

TEST_CASE("TrainConfig validation and digest") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.epochs == 200);
  CHECK(cfg.learning_rate == 1e-4);
  CHECK(cfg.optimizer == Optimizer::kRmsProp);
  TrainConfig other = cfg;
  other.learning_rate = 2e-4;
  CHECK(other.digest() != cfg.digest());
  CHECK(TrainConfig{}.digest() == cfg.digest());
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.rmsprop_decay = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.min_samples_split = 1;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("logistic loss and gradient against finite differences") {
  const auto data = blobs(1, 10, 6, 0.5);
  std::mt19937_64 gen(2);
  LinearModel m{oracle::random_vector(gen, 6, -0.5, 0.5), 0.1};
  const auto batch = all_indices(data.size());
  const auto lg = logistic_loss_grad(m, data, batch);

  // Independent loss: mean of -[y log s + (1-y) log(1-s)].
  auto loss = [&] {
    double acc = 0.0;
    for (const auto& x : data) {
      double z = m.bias;
      for (std::size_t i = 0; i < 6; ++i) z += m.weights[i] * x.values[i];
      const double s = 1.0 / (1.0 + std::exp(-z));
      const double y = *x.label == Label::kInfested ? 1.0 : 0.0;
      acc -= y * std::log(s) + (1 - y) * std::log(1 - s);
    }
    return acc / static_cast<double>(data.size());
  };
  CHECK(lg.loss == doctest::Approx(loss()).epsilon(1e-12));
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(oracle::relative_error(lg.grad_w[i],
                                 oracle::central_difference(loss, m.weights[i], 1e-5)) < 1e-6);
  }
  CHECK(oracle::relative_error(lg.grad_b, oracle::central_difference(loss, m.bias, 1e-5)) <
        1e-6);
  // Extreme margins stay finite.
  LinearModel big{std::vector<double>(6, 1e4), 0.0};
  const auto far = logistic_loss_grad(big, data, batch);
  CHECK(std::isfinite(far.loss));
  for (double g : far.grad_w) CHECK(std::isfinite(g));
}

TEST_CASE("hinge loss and gradient against finite differences") {
  const auto data = blobs(4, 10, 5, 0.3);
  std::mt19937_64 gen(5);
  LinearModel m{oracle::random_vector(gen, 5, -0.4, 0.4), -0.05};
  const double lambda = 0.01;
  const auto batch = all_indices(data.size());
  auto loss = [&] {
    double acc = 0.0;
    for (const auto& x : data) {
      double z = m.bias;
      for (std::size_t i = 0; i < 5; ++i) z += m.weights[i] * x.values[i];
      const double y = *x.label == Label::kInfested ? 1.0 : -1.0;
      acc += std::max(0.0, 1.0 - y * z);
    }
    double sq = 0.0;
    for (double w : m.weights) sq += w * w;
    return acc / static_cast<double>(data.size()) + 0.5 * lambda * sq;
  };
  // No sample sits on the hinge, so the loss is differentiable here.
  for (const auto& x : data) {
    const double y = *x.label == Label::kInfested ? 1.0 : -1.0;
    REQUIRE(std::abs(1.0 - y * m.margin(x.values)) > 1e-3);
  }
  const auto lg = hinge_loss_grad(m, data, batch, lambda);
  CHECK(lg.loss == doctest::Approx(loss()).epsilon(1e-12));
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(oracle::relative_error(lg.grad_w[i],
                                 oracle::central_difference(loss, m.weights[i], 1e-6)) < 1e-6);
  }
  CHECK(oracle::relative_error(lg.grad_b, oracle::central_difference(loss, m.bias, 1e-6)) <
        1e-6);
}

TEST_CASE("logistic and SVM separate well-separated blobs") {
  const auto train = blobs(10, 50, 8, 1.5);
  const auto test = blobs(11, 50, 8, 1.5);
  const auto cfg = fast_config();
  const auto lr = train_logistic(train, cfg);
  const auto svm = train_linear_svm(train, cfg);
  CHECK(lr.variant == ModelVariant::kLogistic);
  CHECK(svm.variant == ModelVariant::kLinearSvm);
  CHECK(accuracy(lr, test) == 1.0);
  CHECK(accuracy(svm, test) == 1.0);
  CHECK(lr.input_dim() == 8);
  CHECK(lr.train_config_digest == cfg.digest());
}

TEST_CASE("logistic training lowers the loss and calls back every epoch") {
  const auto data = blobs(12, 40, 10, 0.4);
  auto cfg = fast_config();
  cfg.epochs = 30;
  std::vector<double> losses;
  const auto batch = all_indices(data.size());
  const auto model = train_logistic(data, cfg, [&](int epoch, const ModelParams& m) {
    CHECK(epoch == static_cast<int>(losses.size()) + 1);
    losses.push_back(logistic_loss_grad(std::get<LinearModel>(m.params), data, batch).loss);
  });
  REQUIRE(losses.size() == 30);
  CHECK(losses.front() < std::log(2.0));
  CHECK(losses.back() < losses.front());
  (void)model;
}

TEST_CASE("flipping every label negates the logistic model") {
  auto data = blobs(13, 20, 4, 0.7);
  const auto cfg = fast_config();
  const auto a = std::get<LinearModel>(train_logistic(data, cfg).params);
  for (auto& x : data) {
    x.label = *x.label == Label::kInfested ? Label::kNotInfested : Label::kInfested;
  }
  const auto b = std::get<LinearModel>(train_logistic(data, cfg).params);
  for (std::size_t i = 0; i < 4; ++i) CHECK(b.weights[i] == doctest::Approx(-a.weights[i]));
  CHECK(b.bias == doctest::Approx(-a.bias));
}

TEST_CASE("linear training is deterministic per seed") {
  const auto data = blobs(14, 20, 4, 0.2);
  auto cfg = fast_config();
  const auto a = encode_model(train_logistic(data, cfg));
  CHECK(a == encode_model(train_logistic(data, cfg)));
  cfg.seed = 99;
  CHECK(a != encode_model(train_logistic(data, cfg)));
}

TEST_CASE("degenerate training data") {
  const auto cfg = fast_config();
  std::vector<FeatureVector> one_class = {example({1.0}, Label::kInfested),
                                          example({2.0}, Label::kInfested)};
  CHECK_THROWS_AS(train_logistic(one_class, cfg), DegenerateDataError);
  CHECK_THROWS_AS(train_linear_svm(one_class, cfg), DegenerateDataError);
  CHECK_THROWS_AS(train_decision_tree(one_class, cfg), DegenerateDataError);
  CHECK_THROWS_AS(train_random_forest(one_class, cfg), DegenerateDataError);
  CHECK_THROWS_AS(train_logistic({}, cfg), DegenerateDataError);
  CHECK_THROWS_AS(train_decision_tree({}, cfg), DegenerateDataError);
  std::vector<FeatureVector> ragged = {example({1.0}, Label::kInfested),
                                       example({2.0, 3.0}, Label::kNotInfested)};
  CHECK_THROWS_AS(train_logistic(ragged, cfg), ArgumentError);
  CHECK_THROWS_AS(train_decision_tree(ragged, cfg), ArgumentError);
}

TEST_CASE("gini impurity") {
  CHECK(gini(5, 10) == 0.5);
  CHECK(gini(0, 10) == 0.0);
  CHECK(gini(10, 10) == 0.0);
  CHECK(gini(0, 0) == 0.0);
  CHECK(gini(1, 4) == doctest::Approx(0.375));
}

TEST_CASE("decision tree on the 1-D four-point example") {
  std::vector<FeatureVector> data = {
      example({1.0}, Label::kNotInfested), example({2.0}, Label::kNotInfested),
      example({3.0}, Label::kInfested), example({4.0}, Label::kInfested)};
  const auto model = train_decision_tree(data, TrainConfig{});
  const auto& tree = std::get<DecisionTree>(model.params);
  REQUIRE(tree.nodes.size() == 3);
  CHECK(tree.nodes[0].feature == 0);
  CHECK(tree.nodes[0].threshold == 2.5);
  CHECK(tree.depth() == 1);
  CHECK(tree.nodes[0].infested_fraction == 0.5);
  CHECK(tree.nodes[0].n_samples == 4);
  CHECK(accuracy(model, data) == 1.0);
  CHECK(predict(model, FeatureVector{{2.5}, "", {}}).label == Label::kNotInfested);
  CHECK(predict(model, FeatureVector{{2.6}, "", {}}).score == 1.0);
}

TEST_CASE("decision tree leaves are pure when depth allows") {
  const auto data = blobs(20, 30, 3, 0.3);
  const auto model = train_decision_tree(data, TrainConfig{});
  const auto& tree = std::get<DecisionTree>(model.params);
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) {
      CHECK((node.infested_fraction == 0.0 || node.infested_fraction == 1.0));
    }
  }
  CHECK(accuracy(model, data) == 1.0);
  TrainConfig shallow;
  shallow.max_depth = 2;
  CHECK(std::get<DecisionTree>(train_decision_tree(data, shallow).params).depth() <= 2);
}

TEST_CASE("decision tree is invariant to monotone feature transforms") {
  const auto data = blobs(21, 25, 4, 0.4);
  auto warped = data;
  for (auto& x : warped) {
    for (auto& v : x.values) v = std::exp(v) * 3.0 + 1.0;
  }
  const auto a = train_decision_tree(data, TrainConfig{});
  const auto b = train_decision_tree(warped, TrainConfig{});
  const auto& ta = std::get<DecisionTree>(a.params);
  const auto& tb = std::get<DecisionTree>(b.params);
  REQUIRE(ta.nodes.size() == tb.nodes.size());
  for (std::size_t i = 0; i < ta.nodes.size(); ++i) {
    CHECK(ta.nodes[i].feature == tb.nodes[i].feature);
    CHECK(ta.nodes[i].n_samples == tb.nodes[i].n_samples);
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(predict(a, data[i]).score == predict(b, warped[i]).score);
  }
}

TEST_CASE("forest without bootstrap or subsampling equals the tree") {
  const auto data = blobs(22, 20, 5, 0.3);
  TrainConfig cfg;
  cfg.bootstrap = false;
  cfg.feature_subsample = 5;
  cfg.n_trees = 3;
  const auto forest = train_random_forest(data, cfg);
  const auto tree = train_decision_tree(data, cfg);
  const auto& t = std::get<DecisionTree>(tree.params);
  for (const auto& ft : std::get<RandomForest>(forest.params).trees) {
    REQUIRE(ft.nodes.size() == t.nodes.size());
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      CHECK(ft.nodes[i].feature == t.nodes[i].feature);
      CHECK(ft.nodes[i].threshold == t.nodes[i].threshold);
      CHECK(ft.nodes[i].left == t.nodes[i].left);
      CHECK(ft.nodes[i].infested_fraction == t.nodes[i].infested_fraction);
    }
  }
}

TEST_CASE("forest scores are vote fractions") {
  const auto train = blobs(23, 40, 6, 1.0);
  const auto test = blobs(24, 20, 6, 1.0);
  TrainConfig cfg;
  cfg.n_trees = 10;
  cfg.seed = 7;
  const auto forest = train_random_forest(train, cfg);
  const auto& f = std::get<RandomForest>(forest.params);
  CHECK(f.trees.size() == 10);
  for (const auto& x : test) {
    const auto p = predict(forest, x);
    std::size_t votes = 0;
    for (const auto& t : f.trees) votes += t.leaf_for(x.values).infested_fraction >= 0.5;
    CHECK(p.score == static_cast<double>(votes) / 10.0);
  }
  CHECK(accuracy(forest, test) >= 0.9);
  CHECK(encode_model(forest) == encode_model(train_random_forest(train, cfg)));
}

TEST_CASE("pooling and vectorize") {
  SUBCASE("three 224 images at factor 16 give 588 values") {
    auto img = constant_image(3, 10);
    // A bright left half so the vector is not constant.
    for (std::size_t r = 0; r < 224; ++r) {
      for (std::size_t c = 0; c < 336; ++c) img.pixels.set(r, c, {200, 100, 0});
    }
    const auto v = vectorize(img, 16);
    REQUIRE(v.values.size() == 588);
    CHECK(v.source == "c");
    const double mean = std::accumulate(v.values.begin(), v.values.end(), 0.0) / 588;
    double var = 0.0;
    for (double x : v.values) var += (x - mean) * (x - mean);
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var / 588 == doctest::Approx(1.0));
  }
  SUBCASE("constant image gives the zero vector") {
    for (double x : vectorize(constant_image(3, 77), 16).values) CHECK(x == 0.0);
  }
  SUBCASE("factor 224 on one image gives a single zero") {
    const auto v = vectorize(constant_image(1, 5), 224);
    REQUIRE(v.values.size() == 1);
    CHECK(v.values[0] == 0.0);
  }
  SUBCASE("block averages of the channel mean") {
    RgbImage img(4, 4);
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t c = 0; c < 4; ++c) {
        const auto g = static_cast<std::uint8_t>(r * 4 + c);
        img.set(r, c, {g, 0, 0});
      }
    }
    const auto p = pooled_grayscale(img, 2);
    CHECK(p(0, 0) == doctest::Approx((0 + 1 + 4 + 5) / 4.0 / 3.0 / 255.0));
    CHECK(p(1, 1) == doctest::Approx((10 + 11 + 14 + 15) / 4.0 / 3.0 / 255.0));
  }
  SUBCASE("factor must divide the image") {
    CHECK_THROWS_AS(vectorize(constant_image(3, 0), 5), ArgumentError);
    CHECK_THROWS_AS(vectorize(constant_image(3, 0), 0), ArgumentError);
  }
}

TEST_CASE("predict argument checks") {
  const auto data = blobs(30, 5, 3, 1.0);
  const auto lr = train_logistic(data, fast_config());
  CHECK_THROWS_AS(predict(lr, FeatureVector{{1.0, 2.0}, "", {}}), ArgumentError);
  CHECK_THROWS_AS(predict(lr, constant_image(1, 0)), ArgumentError);
  const auto p = predict(lr, data[0]);
  CHECK((p.score >= 0.0 && p.score <= 1.0));
  CHECK(p.label == label_from_score(p.score));
}

TEST_CASE("model files round-trip every variant") {
  const auto data = blobs(31, 10, 4, 0.5);
  auto cfg = fast_config();
  cfg.n_trees = 4;
  std::vector<ModelParams> models = {train_logistic(data, cfg), train_linear_svm(data, cfg),
                                     train_decision_tree(data, cfg),
                                     train_random_forest(data, cfg)};
  ModelParams cnn;
  cnn.variant = ModelVariant::kSmallCnn;
  cnn.params = CnnModel::initialize(8, 12, 1);
  models.push_back(cnn);
  oracle::TempDir dir("model");
  for (auto& m : models) {
    m.input_digest = "abc123";
    CAPTURE(std::string(to_string(m.variant)));
    const auto bytes = encode_model(m);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "PSMD");
    const auto back = decode_model(bytes);
    CHECK(back.variant == m.variant);
    CHECK(back.input_digest == "abc123");
    CHECK(back.train_config_digest == m.train_config_digest);
    CHECK(encode_model(back) == bytes);
    if (m.variant != ModelVariant::kSmallCnn) {
      for (const auto& x : data) CHECK(predict(back, x).score == predict(m, x).score);
    }
    save_model(m, dir / "m.psmd");
    CHECK(encode_model(load_model(dir / "m.psmd")) == bytes);
  }
}

TEST_CASE("model file errors") {
  const auto data = blobs(32, 5, 2, 0.5);
  const auto bytes = encode_model(train_logistic(data, fast_config()));
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_model(bad), doctest::Contains("bad magic"), FormatError);
  bad = bytes;
  bad[4] = static_cast<std::uint8_t>(kModelFormatVersion + 1);
  CHECK_THROWS_WITH_AS(decode_model(bad), doctest::Contains("unsupported model format version 2"),
                       FormatError);
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS_AS(decode_model(bad), FormatError);
  bad = bytes;
  bad.push_back(0);
  CHECK_THROWS_AS(decode_model(bad), FormatError);
  bad = bytes;
  bad[8] = 77;  // variant tag
  CHECK_THROWS_AS(decode_model(bad), FormatError);
  CHECK_THROWS_AS(decode_model(std::vector<std::uint8_t>{}), FormatError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.psmd"), IoError);
}

}  // namespace palmsense
