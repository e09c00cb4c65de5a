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

// Pipeline configuration and its text format.
//
// One `key = value` per line; `#` starts a comment; blank lines are
// ignored. Unknown keys are an error. Relative paths are taken relative to
// the directory holding the config file. Example:
//
//   features = cqcc, mfcc, bfcc
//   model = logistic
//   epochs = 200
//   learning_rate = 0.0001
//   image_dir = images

#ifndef PALMSENSE_CONFIG_H_
#define PALMSENSE_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "palmsense/classifiers.h"
#include "palmsense/features.h"
#include "palmsense/imaging.h"

namespace palmsense {

struct PipelineConfig {
  std::vector<FeatureKind> features = {FeatureKind::kCqcc, FeatureKind::kMfcc,
                                       FeatureKind::kBfcc};
  ExtractionConfig extraction;
  TrainConfig train;
  ModelVariant model = ModelVariant::kLogistic;
  Colormap colormap = Colormap::kGrayscale;
  // Pooling factor from combined image to the shallow models' vector.
  std::size_t downsample = 16;
  // Split seed. Also copied into train.seed unless train_seed is set.
  std::uint64_t seed = 0;
  bool stratify = false;

  std::filesystem::path audio_dir = "audio";
  std::filesystem::path image_dir = "images";
  std::filesystem::path manifest = "audio/manifest.csv";
  std::filesystem::path model_path = "model.psmd";
  std::filesystem::path log_path = "train_log.csv";
  std::filesystem::path report_path = "report.json";

  // Throws ArgumentError on an empty or duplicated feature list or any
  // invalid nested field.
  void validate() const;

  // Covers everything that shapes a classifier input: feature list,
  // extraction parameters, colormap and downsample factor.
  std::string input_digest() const;
  // input_digest plus split and training settings.
  std::string digest() const;

  // Sets one key from its text value. ArgumentError on an unknown key or a
  // malformed value.
  void set(std::string_view key, std::string_view value,
           const std::filesystem::path& base_dir = {});
};

PipelineConfig parse_config(std::string_view text,
                            const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

// Inverse of parse_config for every key (paths written as stored).
std::string format_config(const PipelineConfig& cfg);

}  // namespace palmsense

#endif  // PALMSENSE_CONFIG_H_
