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

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "palmsense/classifiers.h"
#include "palmsense/error.h"

namespace palmsense {
namespace {

constexpr char kMagic[4] = {'P', 'S', 'M', 'D'};
// Guards against absurd lengths in corrupted files.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void reals(const std::vector<double>& v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  void raw(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::uint64_t count() {
    const std::uint64_t n = u64();
    if (n > kMaxElements) throw FormatError("model file: length field too large");
    return n;
  }
  std::string str() {
    const std::uint64_t n = count();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<double> reals() {
    const std::uint64_t n = count();
    need(n * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (in_.size() - pos_ < n) throw FormatError("model file is truncated");
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_tree(Writer& w, const DecisionTree& t) {
  w.u64(t.n_features);
  w.u64(t.nodes.size());
  for (const auto& n : t.nodes) {
    w.i64(n.feature);
    w.f64(n.threshold);
    w.i64(n.left);
    w.i64(n.right);
    w.f64(n.infested_fraction);
    w.u64(n.n_samples);
  }
}

DecisionTree read_tree(Reader& r) {
  DecisionTree t;
  t.n_features = r.count();
  t.nodes.resize(r.count());
  const auto n_nodes = static_cast<std::int64_t>(t.nodes.size());
  for (auto& n : t.nodes) {
    n.feature = r.i64();
    n.threshold = r.f64();
    n.left = r.i64();
    n.right = r.i64();
    n.infested_fraction = r.f64();
    n.n_samples = r.u64();
    if (!n.is_leaf()) {
      if (n.feature >= static_cast<std::int64_t>(t.n_features) || n.left <= 0 ||
          n.right <= 0 || n.left >= n_nodes || n.right >= n_nodes) {
        throw FormatError("model file: tree node references are invalid");
      }
    }
  }
  if (t.nodes.empty()) throw FormatError("model file: empty tree");
  return t;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const ModelParams& model) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.variant));
  w.str(model.train_config_digest);
  w.str(model.input_digest);
  switch (model.variant) {
    case ModelVariant::kLogistic:
    case ModelVariant::kLinearSvm: {
      const auto& m = std::get<LinearModel>(model.params);
      w.reals(m.weights);
      w.f64(m.bias);
      break;
    }
    case ModelVariant::kDecisionTree:
      write_tree(w, std::get<DecisionTree>(model.params));
      break;
    case ModelVariant::kRandomForest: {
      const auto& f = std::get<RandomForest>(model.params);
      w.u64(f.n_features);
      w.u64(f.trees.size());
      for (const auto& t : f.trees) write_tree(w, t);
      break;
    }
    case ModelVariant::kSmallCnn: {
      const auto& c = std::get<CnnModel>(model.params);
      w.u64(c.in_height);
      w.u64(c.in_width);
      for (auto t : c.tensors()) w.reals({t.begin(), t.end()});
      break;
    }
  }
  return w.take();
}

ModelParams decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a model file (bad magic)");
  }
  Reader r(bytes.subspan(4));
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " +
                      std::to_string(version) + " (this build reads version " +
                      std::to_string(kModelFormatVersion) + ")");
  }
  const std::uint32_t tag = r.u32();
  if (tag > static_cast<std::uint32_t>(ModelVariant::kSmallCnn)) {
    throw FormatError("unknown model variant tag " + std::to_string(tag));
  }
  ModelParams model;
  model.variant = static_cast<ModelVariant>(tag);
  model.train_config_digest = r.str();
  model.input_digest = r.str();
  switch (model.variant) {
    case ModelVariant::kLogistic:
    case ModelVariant::kLinearSvm: {
      LinearModel m;
      m.weights = r.reals();
      m.bias = r.f64();
      model.params = std::move(m);
      break;
    }
    case ModelVariant::kDecisionTree:
      model.params = read_tree(r);
      break;
    case ModelVariant::kRandomForest: {
      RandomForest f;
      f.n_features = r.count();
      f.trees.resize(r.count());
      for (auto& t : f.trees) t = read_tree(r);
      if (f.trees.empty()) throw FormatError("model file: empty forest");
      model.params = std::move(f);
      break;
    }
    case ModelVariant::kSmallCnn: {
      CnnModel c;
      c.in_height = r.count();
      c.in_width = r.count();
      c.conv1_w = r.reals();
      c.conv1_b = r.reals();
      c.conv2_w = r.reals();
      c.conv2_b = r.reals();
      c.dense_w = r.reals();
      c.dense_b = r.reals();
      const CnnModel shape = CnnModel::initialize(
          std::max<std::size_t>(c.in_height, 4), std::max<std::size_t>(c.in_width, 4), 0);
      const auto expect = shape.tensors();
      const auto got = std::as_const(c).tensors();
      for (std::size_t i = 0; i < expect.size(); ++i) {
        if (expect[i].size() != got[i].size()) {
          throw FormatError("model file: CNN tensor shapes are inconsistent");
        }
      }
      model.params = std::move(c);
      break;
    }
  }
  if (!r.done()) throw FormatError("model file has trailing bytes");
  return model;
}

void save_model(const ModelParams& model, const std::filesystem::path& path) {
  const auto bytes = encode_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_model(bytes);
}

}  // namespace palmsense
