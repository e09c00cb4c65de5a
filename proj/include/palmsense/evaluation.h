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

// Dataset manifests, seeded train/val/test splits, confusion counts and
// the accuracy / precision / recall / F1 report.

#ifndef PALMSENSE_EVALUATION_H_
#define PALMSENSE_EVALUATION_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "palmsense/classifiers.h"

namespace palmsense {

struct ManifestRecord {
  std::string clip_id;
  // Relative paths resolve against the manifest's directory.
  std::filesystem::path audio_path;
  Label label = Label::kNotInfested;
  std::optional<std::string> timestamp;
};

struct ClassCounts {
  std::size_t infested = 0;
  std::size_t not_infested = 0;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;
  // Directory that relative audio paths are resolved against.
  std::filesystem::path base_dir;

  ClassCounts class_counts() const;
  std::filesystem::path resolve(const ManifestRecord& r) const;
  const ManifestRecord* find(const std::string& clip_id) const;

  // Duplicate ids are an InputError. With check_paths, so is any audio
  // path that does not exist.
  void validate(bool check_paths = true) const;
};

// CSV with header clip_id,path,label,timestamp. The timestamp column may be
// empty.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
  bool stratified = false;
};

// Ids are sorted, shuffled with Rng(seed), then cut into floor(0.8 N),
// floor(0.1 N) and the remainder. Stratified applies the same rule per
// class. N < 3 is an InputError.
DatasetSplit split(const DatasetManifest& manifest, std::uint64_t seed,
                   bool stratified = false);

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

// Infested is the positive class.
ConfusionMatrix confusion(const std::vector<Prediction>& predictions,
                          const std::vector<Label>& labels);
ConfusionMatrix confusion(const std::vector<Label>& predicted,
                          const std::vector<Label>& labels);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the denominator was zero and the value was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

Metrics metrics(const ConfusionMatrix& cm);

struct EvalReport {
  std::string model_variant;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t n_test = 0;
  ConfusionMatrix confusion;
  Metrics metrics;
  // e.g. pipeline, train_config, model_input.
  std::map<std::string, std::string> digests;
};

// Pretty-printed JSON object with a trailing newline. Key order is fixed so
// equal reports are byte-identical.
std::string report_json(const EvalReport& report);

// 2x2 grid (rows actual, columns predicted; infested first), cell shade
// proportional to the count, with the count drawn in each cell.
RgbImage render_confusion(const ConfusionMatrix& cm);

}  // namespace palmsense

#endif  // PALMSENSE_EVALUATION_H_
