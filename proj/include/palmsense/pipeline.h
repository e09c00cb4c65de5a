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

// Batch stages behind the command-line verbs.
//
// On-disk layout under cfg.image_dir:
//   parts/<stem>.<kind>.png   one rendered feature per clip and kind
//   <stem>.png                the combined image, kinds in cfg.features order
// Every PNG carries tEXt entries: clip_id, kind or feature_order, and
// params_digest, which covers the extraction settings and the source
// audio bytes. A stage skips outputs whose params_digest already matches.

#ifndef PALMSENSE_PIPELINE_H_
#define PALMSENSE_PIPELINE_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "palmsense/classifiers.h"
#include "palmsense/config.h"
#include "palmsense/evaluation.h"
#include "palmsense/synth.h"

namespace palmsense {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitPartial = 3,
};

struct FailureRecord {
  std::string item;
  std::string message;
};

struct BatchResult {
  std::size_t written = 0;
  std::size_t skipped = 0;  // already up to date
  std::vector<FailureRecord> failures;

  // 0 without failures, 3 when some items still succeeded, else 1.
  int exit_code() const;
};

// Sorted *.wav files directly inside dir (extension matched
// case-insensitively).
std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir);

std::filesystem::path part_path(const PipelineConfig& cfg,
                                const std::string& stem, FeatureKind kind);
std::filesystem::path combined_path(const PipelineConfig& cfg,
                                    const std::string& stem);

// Audio resampled to the canonical rate if needed.
AudioClip canonical_clip(const AudioClip& clip);

// Full in-memory path from audio to combined image.
CombinedImage build_combined(const AudioClip& clip, const PipelineConfig& cfg);

// Reads <image_dir>/<stem>.png and checks its feature_order against cfg.
CombinedImage load_combined(const PipelineConfig& cfg, const std::string& stem);

// Dispatches to the vector models (after vectorize) or the CNN.
Prediction classify(const ModelParams& model, const CombinedImage& image,
                    const PipelineConfig& cfg);

// InputError naming both digests when the model was trained on a different
// feature pipeline or has a different input size.
void check_compatible(const ModelParams& model, const PipelineConfig& cfg);

// Renders one image per clip and configured kind. Bad files become
// failure records; an empty directory is an InputError.
BatchResult cmd_extract(const PipelineConfig& cfg, std::size_t jobs,
                        std::ostream& log);

// Joins the parts of every clip found under parts/. A clip missing a kind
// becomes a failure record.
BatchResult cmd_combine(const PipelineConfig& cfg, std::size_t jobs,
                        std::ostream& log);

struct EpochRow {
  int epoch = 0;
  double val_accuracy = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  ModelParams model;
  DatasetSplit split;
  std::vector<EpochRow> log;
};

// Splits cfg.manifest with cfg.seed, trains cfg.model on the train ids and
// records validation accuracy and mean cross-entropy of the infested score
// after every epoch (one row for tree models). Writes cfg.model_path and
// cfg.log_path. A class with no training examples is a DegenerateDataError.
TrainResult cmd_train(const PipelineConfig& cfg, std::ostream& log);

std::string format_training_log(const std::vector<EpochRow>& rows);

// Scores the test split of cfg.manifest with the model at cfg.model_path.
// Writes cfg.report_path and a confusion grid PNG beside it
// (<report stem>.confusion.png).
EvalReport cmd_eval(const PipelineConfig& cfg, std::size_t jobs,
                    std::ostream& log);

// "label=<label> score=<0.xxxx>"
std::string format_prediction(const Prediction& p);

Prediction cmd_predict(const PipelineConfig& cfg, const ModelParams& model,
                       const std::filesystem::path& wav);

}  // namespace palmsense

#endif  // PALMSENSE_PIPELINE_H_
