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

#include "palmsense/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "palmsense/digest.h"
#include "palmsense/error.h"

namespace palmsense {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            std::string_view expected) {
  throw ArgumentError("config key '" + std::string(key) + "': cannot parse '" +
                      std::string(value) + "' as " + std::string(expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    bad_value(key, value, std::is_integral_v<T> ? "an integer" : "a number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "a boolean");
}

std::string_view window_name(WindowKind w) {
  switch (w) {
    case WindowKind::kNone:
      return "none";
    case WindowKind::kHamming:
      return "hamming";
    case WindowKind::kHann:
      return "hann";
  }
  return "?";
}

std::filesystem::path resolve(std::string_view value,
                              const std::filesystem::path& base_dir) {
  std::filesystem::path p{std::string(value)};
  if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
  return p;
}

std::string join_features(const std::vector<FeatureKind>& kinds) {
  std::string out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (i > 0) out += ",";
    out += to_string(kinds[i]);
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  if (features.empty()) throw ArgumentError("feature list is empty");
  std::set<FeatureKind> seen;
  for (FeatureKind k : features) {
    if (!seen.insert(k).second) {
      throw ArgumentError("feature listed twice: " + std::string(to_string(k)));
    }
  }
  extraction.validate();
  train.validate();
  if (downsample == 0 || kImageSize % downsample != 0) {
    throw ArgumentError("downsample must divide " + std::to_string(kImageSize));
  }
}

std::string PipelineConfig::input_digest() const {
  Digest d;
  d.add("format", "palmsense-input-1")
      .add("features", join_features(features))
      .add("colormap", std::string(to_string(colormap)))
      .add("downsample", downsample);
  for (FeatureKind k : features) {
    d.add(std::string(to_string(k)), params_digest(k, extraction));
  }
  return d.hex();
}

std::string PipelineConfig::digest() const {
  Digest d;
  d.add("format", "palmsense-pipeline-1")
      .add("input", input_digest())
      .add("train", train.digest())
      .add("model", std::string(to_string(model)))
      .add("seed", static_cast<long long>(seed))
      .add("stratify", stratify);
  return d.hex();
}

void PipelineConfig::set(std::string_view key, std::string_view value,
                         const std::filesystem::path& base_dir) {
  value = trim(value);
  auto& x = extraction;
  if (key == "features") {
    std::vector<FeatureKind> kinds;
    std::size_t start = 0;
    while (start <= value.size()) {
      const auto comma = value.find(',', start);
      const auto item = trim(value.substr(
          start, comma == std::string_view::npos ? std::string_view::npos
                                                 : comma - start));
      const auto kind = parse_feature_kind(item);
      if (!kind) bad_value(key, item, "a feature kind");
      kinds.push_back(*kind);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    features = std::move(kinds);
  } else if (key == "frame_len") {
    x.frame_len = parse_number<std::size_t>(key, value);
  } else if (key == "hop_len") {
    x.hop_len = parse_number<std::size_t>(key, value);
  } else if (key == "n_fft") {
    x.n_fft = parse_number<std::size_t>(key, value);
  } else if (key == "window") {
    if (value == "none") x.window = WindowKind::kNone;
    else if (value == "hamming") x.window = WindowKind::kHamming;
    else if (value == "hann") x.window = WindowKind::kHann;
    else bad_value(key, value, "none, hamming or hann");
  } else if (key == "pre_emphasis") {
    x.pre_emphasis = parse_number<double>(key, value);
  } else if (key == "n_mel") {
    x.n_mel = parse_number<std::size_t>(key, value);
  } else if (key == "n_bark") {
    x.n_bark = parse_number<std::size_t>(key, value);
  } else if (key == "n_linear") {
    x.n_linear = parse_number<std::size_t>(key, value);
  } else if (key == "n_gammatone") {
    x.n_gammatone = parse_number<std::size_t>(key, value);
  } else if (key == "n_ceps") {
    x.n_ceps = parse_number<std::size_t>(key, value);
  } else if (key == "f_min") {
    x.f_min = parse_number<double>(key, value);
  } else if (key == "f_max") {
    x.f_max = parse_number<double>(key, value);
  } else if (key == "bark_variant") {
    if (value == "paper") x.bark_variant = BarkVariant::kPaper;
    else if (value == "traunmueller") x.bark_variant = BarkVariant::kTraunmueller;
    else bad_value(key, value, "paper or traunmueller");
  } else if (key == "cqt_f_min") {
    x.cqt_f_min = parse_number<double>(key, value);
  } else if (key == "cqt_bins_per_octave") {
    x.cqt_bins_per_octave = parse_number<int>(key, value);
  } else if (key == "cqt_octaves") {
    x.cqt_octaves = parse_number<int>(key, value);
  } else if (key == "log_floor") {
    x.log_floor = parse_number<double>(key, value);
  } else if (key == "append_deltas") {
    x.append_deltas = parse_bool(key, value);
  } else if (key == "delta_width") {
    x.delta_width = parse_number<int>(key, value);
  } else if (key == "model") {
    const auto v = parse_model_variant(value);
    if (!v) bad_value(key, value, "a model variant");
    model = *v;
  } else if (key == "epochs") {
    train.epochs = parse_number<int>(key, value);
  } else if (key == "learning_rate") {
    train.learning_rate = parse_number<double>(key, value);
  } else if (key == "optimizer") {
    if (value == "rmsprop") train.optimizer = Optimizer::kRmsProp;
    else if (value == "sgd") train.optimizer = Optimizer::kSgd;
    else bad_value(key, value, "rmsprop or sgd");
  } else if (key == "rmsprop_decay") {
    train.rmsprop_decay = parse_number<double>(key, value);
  } else if (key == "rmsprop_epsilon") {
    train.rmsprop_epsilon = parse_number<double>(key, value);
  } else if (key == "batch_size") {
    train.batch_size = parse_number<std::size_t>(key, value);
  } else if (key == "svm_lambda") {
    train.svm_lambda = parse_number<double>(key, value);
  } else if (key == "max_depth") {
    train.max_depth = parse_number<std::size_t>(key, value);
  } else if (key == "min_samples_split") {
    train.min_samples_split = parse_number<std::size_t>(key, value);
  } else if (key == "n_trees") {
    train.n_trees = parse_number<std::size_t>(key, value);
  } else if (key == "feature_subsample") {
    train.feature_subsample = parse_number<std::size_t>(key, value);
  } else if (key == "bootstrap") {
    train.bootstrap = parse_bool(key, value);
  } else if (key == "colormap") {
    const auto c = parse_colormap(value);
    if (!c) bad_value(key, value, "grayscale or viridis");
    colormap = *c;
  } else if (key == "downsample") {
    downsample = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    seed = parse_number<std::uint64_t>(key, value);
    train.seed = seed;
  } else if (key == "train_seed") {
    train.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "stratify") {
    stratify = parse_bool(key, value);
  } else if (key == "audio_dir") {
    audio_dir = resolve(value, base_dir);
  } else if (key == "image_dir") {
    image_dir = resolve(value, base_dir);
  } else if (key == "manifest") {
    manifest = resolve(value, base_dir);
  } else if (key == "model_path") {
    model_path = resolve(value, base_dir);
  } else if (key == "log_path") {
    log_path = resolve(value, base_dir);
  } else if (key == "report_path") {
    report_path = resolve(value, base_dir);
  } else {
    throw ArgumentError("unknown config key '" + std::string(key) + "'");
  }
}

PipelineConfig parse_config(std::string_view text,
                            const std::filesystem::path& base_dir) {
  PipelineConfig cfg;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ArgumentError("config line " + std::to_string(line_no) +
                          ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1), base_dir);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

std::string format_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  const auto& x = cfg.extraction;
  const auto& t = cfg.train;
  out << "features = " << join_features(cfg.features) << '\n'
      << "frame_len = " << x.frame_len << '\n'
      << "hop_len = " << x.hop_len << '\n'
      << "n_fft = " << x.n_fft << '\n'
      << "window = " << window_name(x.window) << '\n'
      << "pre_emphasis = " << x.pre_emphasis << '\n'
      << "n_mel = " << x.n_mel << '\n'
      << "n_bark = " << x.n_bark << '\n'
      << "n_linear = " << x.n_linear << '\n'
      << "n_gammatone = " << x.n_gammatone << '\n'
      << "n_ceps = " << x.n_ceps << '\n'
      << "f_min = " << x.f_min << '\n'
      << "f_max = " << x.f_max << '\n'
      << "bark_variant = "
      << (x.bark_variant == BarkVariant::kPaper ? "paper" : "traunmueller") << '\n'
      << "cqt_f_min = " << x.cqt_f_min << '\n'
      << "cqt_bins_per_octave = " << x.cqt_bins_per_octave << '\n'
      << "cqt_octaves = " << x.cqt_octaves << '\n'
      << "log_floor = " << x.log_floor << '\n'
      << "append_deltas = " << (x.append_deltas ? "true" : "false") << '\n'
      << "delta_width = " << x.delta_width << '\n'
      << "model = " << to_string(cfg.model) << '\n'
      << "epochs = " << t.epochs << '\n'
      << "learning_rate = " << t.learning_rate << '\n'
      << "optimizer = " << (t.optimizer == Optimizer::kRmsProp ? "rmsprop" : "sgd")
      << '\n'
      << "rmsprop_decay = " << t.rmsprop_decay << '\n'
      << "rmsprop_epsilon = " << t.rmsprop_epsilon << '\n'
      << "batch_size = " << t.batch_size << '\n'
      << "svm_lambda = " << t.svm_lambda << '\n'
      << "max_depth = " << t.max_depth << '\n'
      << "min_samples_split = " << t.min_samples_split << '\n'
      << "n_trees = " << t.n_trees << '\n'
      << "feature_subsample = " << t.feature_subsample << '\n'
      << "bootstrap = " << (t.bootstrap ? "true" : "false") << '\n'
      << "colormap = " << to_string(cfg.colormap) << '\n'
      << "downsample = " << cfg.downsample << '\n'
      << "seed = " << cfg.seed << '\n'
      << "train_seed = " << t.seed << '\n'
      << "stratify = " << (cfg.stratify ? "true" : "false") << '\n'
      << "audio_dir = " << cfg.audio_dir.generic_string() << '\n'
      << "image_dir = " << cfg.image_dir.generic_string() << '\n'
      << "manifest = " << cfg.manifest.generic_string() << '\n'
      << "model_path = " << cfg.model_path.generic_string() << '\n'
      << "log_path = " << cfg.log_path.generic_string() << '\n'
      << "report_path = " << cfg.report_path.generic_string() << '\n';
  return out.str();
}

}  // namespace palmsense
