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

// Small from-scratch convolutional network with hand-written backprop.
// Feature maps are stored channel-major: index (c * H + y) * W + x.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "palmsense/classifiers.h"
#include "palmsense/error.h"
#include "palmsense/random.h"

namespace palmsense {
namespace {

constexpr std::size_t kK = 3;  // kernel side

struct Shape {
  std::size_t c, h, w;
  std::size_t size() const { return c * h * w; }
};

// 3x3 zero-padded convolution: in (ci, h, w) -> out (co, h, w).
void conv_forward(const std::vector<double>& in, Shape s,
                  const std::vector<double>& weights,
                  const std::vector<double>& bias, std::size_t co,
                  std::vector<double>& out) {
  out.assign(co * s.h * s.w, 0.0);
  for (std::size_t o = 0; o < co; ++o) {
    double* dst = out.data() + o * s.h * s.w;
    std::fill(dst, dst + s.h * s.w, bias[o]);
    for (std::size_t i = 0; i < s.c; ++i) {
      const double* src = in.data() + i * s.h * s.w;
      const double* k = weights.data() + (o * s.c + i) * kK * kK;
      for (std::size_t dy = 0; dy < kK; ++dy) {
        for (std::size_t dx = 0; dx < kK; ++dx) {
          const double wv = k[dy * kK + dx];
          // Output (y, x) reads input (y + dy - 1, x + dx - 1).
          const std::size_t y0 = dy == 0 ? 1 : 0;
          const std::size_t y1 = dy == 2 ? s.h - 1 : s.h;
          const std::size_t x0 = dx == 0 ? 1 : 0;
          const std::size_t x1 = dx == 2 ? s.w - 1 : s.w;
          for (std::size_t y = y0; y < y1; ++y) {
            const double* srow = src + (y + dy - 1) * s.w +
                                 (static_cast<std::ptrdiff_t>(dx) - 1);
            double* drow = dst + y * s.w;
            for (std::size_t x = x0; x < x1; ++x) drow[x] += wv * srow[x];
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients and (optionally) the input gradient.
void conv_backward(const std::vector<double>& in, Shape s,
                   const std::vector<double>& weights, std::size_t co,
                   const std::vector<double>& d_out, std::vector<double>& d_w,
                   std::vector<double>& d_b, std::vector<double>* d_in) {
  if (d_in != nullptr) d_in->assign(in.size(), 0.0);
  for (std::size_t o = 0; o < co; ++o) {
    const double* g = d_out.data() + o * s.h * s.w;
    d_b[o] += std::accumulate(g, g + s.h * s.w, 0.0);
    for (std::size_t i = 0; i < s.c; ++i) {
      const double* src = in.data() + i * s.h * s.w;
      const std::size_t kbase = (o * s.c + i) * kK * kK;
      for (std::size_t dy = 0; dy < kK; ++dy) {
        for (std::size_t dx = 0; dx < kK; ++dx) {
          const std::size_t y0 = dy == 0 ? 1 : 0;
          const std::size_t y1 = dy == 2 ? s.h - 1 : s.h;
          const std::size_t x0 = dx == 0 ? 1 : 0;
          const std::size_t x1 = dx == 2 ? s.w - 1 : s.w;
          const double wv = weights[kbase + dy * kK + dx];
          double acc = 0.0;
          for (std::size_t y = y0; y < y1; ++y) {
            const double* srow = src + (y + dy - 1) * s.w +
                                 (static_cast<std::ptrdiff_t>(dx) - 1);
            const double* grow = g + y * s.w;
            for (std::size_t x = x0; x < x1; ++x) acc += grow[x] * srow[x];
            if (d_in != nullptr) {
              double* drow = d_in->data() + i * s.h * s.w + (y + dy - 1) * s.w +
                             (static_cast<std::ptrdiff_t>(dx) - 1);
              for (std::size_t x = x0; x < x1; ++x) drow[x] += wv * grow[x];
            }
          }
          d_w[kbase + dy * kK + dx] += acc;
        }
      }
    }
  }
}

void relu(std::vector<double>& v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

// 2x2 stride-2 max pool. argmax holds the input index of each output.
void pool_forward(const std::vector<double>& in, Shape s,
                  std::vector<double>& out, std::vector<std::size_t>& argmax) {
  const std::size_t oh = s.h / 2;
  const std::size_t ow = s.w / 2;
  out.assign(s.c * oh * ow, 0.0);
  argmax.assign(out.size(), 0);
  for (std::size_t c = 0; c < s.c; ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = (c * s.h + 2 * y) * s.w + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (c * s.h + 2 * y + dy) * s.w + 2 * x + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (c * oh + y) * ow + x;
        out[o] = in[best];
        argmax[o] = best;
      }
    }
  }
}

struct Activations {
  Shape in_shape, c1_shape, p1_shape, c2_shape, p2_shape;
  std::vector<double> input;
  std::vector<double> a1;  // relu(conv1)
  std::vector<double> p1;
  std::vector<std::size_t> p1_arg;
  std::vector<double> a2;  // relu(conv2)
  std::vector<double> p2;  // also the flattened dense input
  std::vector<std::size_t> p2_arg;
  std::array<double, 2> probs{};
};

void forward(const CnnModel& m, const RealMatrix& input, Activations& act) {
  if (input.rows() != m.in_height || input.cols() != m.in_width) {
    throw ArgumentError("CNN input is " + std::to_string(input.rows()) + "x" +
                        std::to_string(input.cols()) + ", model expects " +
                        std::to_string(m.in_height) + "x" +
                        std::to_string(m.in_width));
  }
  act.in_shape = {1, m.in_height, m.in_width};
  act.c1_shape = {CnnModel::kConv1, m.in_height, m.in_width};
  act.p1_shape = {CnnModel::kConv1, m.in_height / 2, m.in_width / 2};
  act.c2_shape = {CnnModel::kConv2, act.p1_shape.h, act.p1_shape.w};
  act.p2_shape = {CnnModel::kConv2, act.p1_shape.h / 2, act.p1_shape.w / 2};

  act.input = input.data();
  conv_forward(act.input, act.in_shape, m.conv1_w, m.conv1_b, CnnModel::kConv1,
               act.a1);
  relu(act.a1);
  pool_forward(act.a1, act.c1_shape, act.p1, act.p1_arg);
  conv_forward(act.p1, act.p1_shape, m.conv2_w, m.conv2_b, CnnModel::kConv2,
               act.a2);
  relu(act.a2);
  pool_forward(act.a2, act.c2_shape, act.p2, act.p2_arg);

  const std::size_t flat = act.p2.size();
  std::array<double, 2> logits{};
  for (std::size_t k = 0; k < CnnModel::kClasses; ++k) {
    const double* w = m.dense_w.data() + k * flat;
    double z = m.dense_b[k];
    for (std::size_t i = 0; i < flat; ++i) z += w[i] * act.p2[i];
    logits[k] = z;
  }
  const double mx = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - mx);
  const double e1 = std::exp(logits[1] - mx);
  act.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
}

void fill_glorot(std::vector<double>& w, std::size_t fan_in,
                 std::size_t fan_out, Rng& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w) v = rng.uniform(-limit, limit);
}

CnnModel zeros_like(const CnnModel& m) {
  CnnModel z;
  z.in_height = m.in_height;
  z.in_width = m.in_width;
  z.conv1_w.assign(m.conv1_w.size(), 0.0);
  z.conv1_b.assign(m.conv1_b.size(), 0.0);
  z.conv2_w.assign(m.conv2_w.size(), 0.0);
  z.conv2_b.assign(m.conv2_b.size(), 0.0);
  z.dense_w.assign(m.dense_w.size(), 0.0);
  z.dense_b.assign(m.dense_b.size(), 0.0);
  return z;
}

}  // namespace

CnnModel CnnModel::initialize(std::size_t in_height, std::size_t in_width,
                              std::uint64_t seed) {
  if (in_height < 4 || in_width < 4) {
    throw ArgumentError("CNN input must be at least 4x4");
  }
  CnnModel m;
  m.in_height = in_height;
  m.in_width = in_width;
  m.conv1_w.resize(kConv1 * 1 * kK * kK);
  m.conv1_b.assign(kConv1, 0.0);
  m.conv2_w.resize(kConv2 * kConv1 * kK * kK);
  m.conv2_b.assign(kConv2, 0.0);
  m.dense_w.resize(kClasses * m.flat_size());
  m.dense_b.assign(kClasses, 0.0);
  Rng rng(seed);
  fill_glorot(m.conv1_w, 1 * kK * kK, kConv1 * kK * kK, rng);
  fill_glorot(m.conv2_w, kConv1 * kK * kK, kConv2 * kK * kK, rng);
  fill_glorot(m.dense_w, m.flat_size(), kClasses, rng);
  return m;
}

std::vector<std::span<double>> CnnModel::tensors() {
  return {conv1_w, conv1_b, conv2_w, conv2_b, dense_w, dense_b};
}

std::vector<std::span<const double>> CnnModel::tensors() const {
  return {conv1_w, conv1_b, conv2_w, conv2_b, dense_w, dense_b};
}

RealMatrix cnn_input(const RgbImage& image) {
  RealMatrix m = pooled_grayscale(image, CnnModel::kPool);
  auto& v = m.data();
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  for (double& x : v) x = sd > 1e-12 ? (x - mean) / sd : 0.0;
  return m;
}

std::array<double, 2> cnn_forward(const CnnModel& model,
                                  const RealMatrix& input) {
  Activations act;
  forward(model, input, act);
  return act.probs;
}

CnnLossGrad cnn_loss_grad(const CnnModel& model,
                          const std::vector<CnnSample>& data,
                          std::span<const std::size_t> batch) {
  CnnLossGrad out;
  out.grad = zeros_like(model);
  if (batch.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  Activations act;
  std::vector<double> d_a2;
  std::vector<double> d_p1;
  std::vector<double> d_a1;
  for (std::size_t idx : batch) {
    const CnnSample& sample = data[idx];
    forward(model, sample.input, act);
    const std::size_t y = sample.label == Label::kInfested ? 1 : 0;
    out.loss -= std::log(std::max(act.probs[y], 1e-300)) * inv_n;

    // Softmax + cross-entropy: dL/dz = p - onehot.
    std::array<double, 2> d_logits = {act.probs[0] * inv_n,
                                      act.probs[1] * inv_n};
    d_logits[y] -= inv_n;

    const std::size_t flat = act.p2.size();
    std::vector<double> d_p2(flat, 0.0);
    for (std::size_t k = 0; k < CnnModel::kClasses; ++k) {
      out.grad.dense_b[k] += d_logits[k];
      double* gw = out.grad.dense_w.data() + k * flat;
      const double* w = model.dense_w.data() + k * flat;
      for (std::size_t i = 0; i < flat; ++i) {
        gw[i] += d_logits[k] * act.p2[i];
        d_p2[i] += d_logits[k] * w[i];
      }
    }

    d_a2.assign(act.a2.size(), 0.0);
    for (std::size_t i = 0; i < flat; ++i) d_a2[act.p2_arg[i]] += d_p2[i];
    for (std::size_t i = 0; i < d_a2.size(); ++i) {
      if (act.a2[i] <= 0.0) d_a2[i] = 0.0;
    }
    conv_backward(act.p1, act.p1_shape, model.conv2_w, CnnModel::kConv2, d_a2,
                  out.grad.conv2_w, out.grad.conv2_b, &d_p1);

    d_a1.assign(act.a1.size(), 0.0);
    for (std::size_t i = 0; i < d_p1.size(); ++i) d_a1[act.p1_arg[i]] += d_p1[i];
    for (std::size_t i = 0; i < d_a1.size(); ++i) {
      if (act.a1[i] <= 0.0) d_a1[i] = 0.0;
    }
    conv_backward(act.input, act.in_shape, model.conv1_w, CnnModel::kConv1,
                  d_a1, out.grad.conv1_w, out.grad.conv1_b, nullptr);
  }
  return out;
}

ModelParams train_small_cnn(const std::vector<CnnSample>& samples,
                            const TrainConfig& cfg,
                            const EpochCallback& on_epoch) {
  cfg.validate();
  if (samples.empty()) throw DegenerateDataError("no training examples");
  const std::size_t h = samples.front().input.rows();
  const std::size_t w = samples.front().input.cols();
  std::size_t n_pos = 0;
  for (const auto& s : samples) {
    if (s.input.rows() != h || s.input.cols() != w) {
      throw InputError("CNN training images differ in size");
    }
    if (s.label == Label::kInfested) ++n_pos;
  }
  if (n_pos == 0 || n_pos == samples.size()) {
    throw DegenerateDataError(
        "training data must contain both infested and not_infested examples");
  }

  ModelParams model;
  model.variant = ModelVariant::kSmallCnn;
  model.train_config_digest = cfg.digest();
  model.params = CnnModel::initialize(h, w, cfg.seed);
  auto& net = std::get<CnnModel>(model.params);

  CnnModel mean_square = zeros_like(net);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  // Separate stream from the weight initializer.
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> batch(order.data() + start,
                                               end - start);
      CnnLossGrad lg = cnn_loss_grad(net, samples, batch);
      auto params = net.tensors();
      auto grads = std::as_const(lg.grad).tensors();
      auto state = mean_square.tensors();
      for (std::size_t t = 0; t < params.size(); ++t) {
        optimizer_step(params[t], grads[t], state[t], cfg);
      }
    }
    if (on_epoch) on_epoch(epoch, model);
  }
  return model;
}

ModelParams train_small_cnn(const std::vector<CombinedImage>& images,
                            const std::vector<Label>& labels,
                            const TrainConfig& cfg,
                            const EpochCallback& on_epoch) {
  if (images.size() != labels.size()) {
    throw ArgumentError("images and labels differ in count");
  }
  std::vector<CnnSample> samples;
  samples.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].pixels.width() != images.front().pixels.width()) {
      throw InputError("CNN training images differ in width");
    }
    samples.push_back({cnn_input(images[i].pixels), labels[i]});
  }
  return train_small_cnn(samples, cfg, on_epoch);
}

Prediction predict(const ModelParams& model, const RealMatrix& cnn_tensor) {
  if (model.variant != ModelVariant::kSmallCnn) {
    throw ArgumentError("only the CNN model takes image tensors");
  }
  const double score = cnn_forward(std::get<CnnModel>(model.params), cnn_tensor)[1];
  return {label_from_score(score), score};
}

Prediction predict(const ModelParams& model, const CombinedImage& image) {
  if (model.variant != ModelVariant::kSmallCnn) {
    throw ArgumentError("only the CNN model takes images directly");
  }
  return predict(model, cnn_input(image.pixels));
}

}  // namespace palmsense
