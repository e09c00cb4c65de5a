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

// CART with Gini impurity, and a bagged forest built from it.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "palmsense/classifiers.h"
#include "palmsense/error.h"
#include "palmsense/random.h"

namespace palmsense {
namespace {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<FeatureVector>& data, const TrainConfig& cfg,
              std::size_t features_per_split, Rng* rng)
      : data_(data),
        cfg_(cfg),
        n_features_(data.front().values.size()),
        features_per_split_(features_per_split),
        rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    tree_.n_features = n_features_;
    grow(samples, 0);
    return std::move(tree_);
  }

 private:
  std::size_t count_infested(const std::vector<std::size_t>& s) const {
    std::size_t n = 0;
    for (std::size_t i : s) n += *data_[i].label == Label::kInfested ? 1 : 0;
    return n;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> all(n_features_);
    std::iota(all.begin(), all.end(), 0);
    if (features_per_split_ >= n_features_) return all;
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    for (std::size_t i = 0; i < features_per_split_; ++i) {
      const std::size_t j = i + rng_->below(n_features_ - i);
      std::swap(all[i], all[j]);
    }
    all.resize(features_per_split_);
    std::sort(all.begin(), all.end());
    return all;
  }

  Split best_split(const std::vector<std::size_t>& samples) {
    Split best;
    best.impurity = 2.0;
    const std::size_t n = samples.size();
    const std::size_t total_pos = count_infested(samples);
    std::vector<std::pair<double, int>> column(n);
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& ex = data_[samples[i]];
        column[i] = {ex.values[f], *ex.label == Label::kInfested ? 1 : 0};
      }
      std::sort(column.begin(), column.end());
      std::size_t left_pos = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_pos += static_cast<std::size_t>(column[i].second);
        const double lo = column[i].first;
        const double hi = column[i + 1].first;
        if (!(lo < hi)) continue;
        double threshold = 0.5 * (lo + hi);
        if (threshold >= hi) threshold = lo;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        const double impurity =
            (static_cast<double>(n_left) * gini(left_pos, n_left) +
             static_cast<double>(n_right) *
                 gini(total_pos - left_pos, n_right)) /
            static_cast<double>(n);
        // Strict improvement keeps the lowest feature, then lowest threshold.
        if (impurity < best.impurity - 1e-12) {
          best = {true, f, threshold, impurity};
        }
      }
    }
    return best;
  }

  std::size_t grow(const std::vector<std::size_t>& samples, std::size_t depth) {
    const std::size_t node_index = tree_.nodes.size();
    tree_.nodes.emplace_back();
    const std::size_t n_pos = count_infested(samples);
    {
      TreeNode& node = tree_.nodes[node_index];
      node.n_samples = samples.size();
      node.infested_fraction =
          static_cast<double>(n_pos) / static_cast<double>(samples.size());
    }
    const bool pure = n_pos == 0 || n_pos == samples.size();
    if (pure || depth >= cfg_.max_depth ||
        samples.size() < cfg_.min_samples_split) {
      return node_index;
    }
    const Split split = best_split(samples);
    if (!split.found) return node_index;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t i : samples) {
      (data_[i].values[split.feature] <= split.threshold ? left : right)
          .push_back(i);
    }
    const std::size_t l = grow(left, depth + 1);
    const std::size_t r = grow(right, depth + 1);
    TreeNode& node = tree_.nodes[node_index];
    node.feature = static_cast<std::int64_t>(split.feature);
    node.threshold = split.threshold;
    node.left = static_cast<std::int64_t>(l);
    node.right = static_cast<std::int64_t>(r);
    return node_index;
  }

  const std::vector<FeatureVector>& data_;
  const TrainConfig& cfg_;
  std::size_t n_features_;
  std::size_t features_per_split_;
  Rng* rng_;
  DecisionTree tree_;
};

void validate_tree_data(const std::vector<FeatureVector>& data) {
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

}  // namespace

double gini(std::size_t n_infested, std::size_t n_total) {
  if (n_total == 0) return 0.0;
  const double p = static_cast<double>(n_infested) / static_cast<double>(n_total);
  return 2.0 * p * (1.0 - p);
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack = {{0, 0}};
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return best;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  if (x.size() != n_features) {
    throw ArgumentError("input dimension " + std::to_string(x.size()) +
                        " does not match tree dimension " +
                        std::to_string(n_features));
  }
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& node = nodes[i];
    i = static_cast<std::size_t>(
        x[static_cast<std::size_t>(node.feature)] <= node.threshold
            ? node.left
            : node.right);
  }
  return nodes[i];
}

ModelParams train_decision_tree(const std::vector<FeatureVector>& data,
                                const TrainConfig& cfg) {
  cfg.validate();
  validate_tree_data(data);
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  TreeBuilder builder(data, cfg, data.front().values.size(), nullptr);

  ModelParams model;
  model.variant = ModelVariant::kDecisionTree;
  model.train_config_digest = cfg.digest();
  model.params = builder.build(std::move(all));
  return model;
}

ModelParams train_random_forest(const std::vector<FeatureVector>& data,
                                const TrainConfig& cfg) {
  cfg.validate();
  validate_tree_data(data);
  const std::size_t n = data.size();
  const std::size_t dim = data.front().values.size();
  const std::size_t per_split =
      cfg.feature_subsample == 0
          ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim))))
          : std::min(cfg.feature_subsample, dim);

  Rng rng(cfg.seed);
  RandomForest forest;
  forest.n_features = dim;
  for (std::size_t t = 0; t < cfg.n_trees; ++t) {
    std::vector<std::size_t> sample(n);
    if (cfg.bootstrap) {
      for (auto& s : sample) s = rng.below(n);
      std::sort(sample.begin(), sample.end());
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    TreeBuilder builder(data, cfg, per_split, &rng);
    forest.trees.push_back(builder.build(std::move(sample)));
  }

  ModelParams model;
  model.variant = ModelVariant::kRandomForest;
  model.train_config_digest = cfg.digest();
  model.params = std::move(forest);
  return model;
}

}  // namespace palmsense
