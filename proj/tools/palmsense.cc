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

// palmsense: synth | extract | combine | train | eval | predict

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "palmsense/config.h"
#include "palmsense/error.h"
#include "palmsense/pipeline.h"

namespace {

using palmsense::PipelineConfig;

int report_batch(const char* verb, const palmsense::BatchResult& r) {
  std::cerr << verb << ": " << r.written << " written, " << r.skipped
            << " up to date, " << r.failures.size() << " failed\n";
  for (const auto& f : r.failures) {
    std::cerr << "  failed: " << f.item << ": " << f.message << '\n';
  }
  return r.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic infestation detection pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--seed", seed, "split and training seed (synth: corpus seed)");
  app.add_option("--jobs", jobs, "worker threads for file-level stages")
      ->check(CLI::PositiveNumber);

  // Per-verb path overrides; empty keeps the config value.
  std::string audio_dir, image_dir, manifest, model_path, log_path, report_path;
  std::string variant;

  auto* synth = app.add_subcommand("synth", "write a synthetic WAV corpus and manifest");
  palmsense::SynthSpec spec;
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--infested", spec.n_infested, "infested clips");
  synth->add_option("--clean", spec.n_clean, "clean clips");
  synth->add_option("--seconds", spec.clip_seconds, "clip length");
  double snr = 10.0;
  synth->add_option("--snr", snr, "pulse-to-noise ratio in dB");

  auto* extract = app.add_subcommand("extract", "render feature images for every WAV");
  extract->add_option("--audio-dir", audio_dir);
  extract->add_option("--image-dir", image_dir);

  auto* combine = app.add_subcommand("combine", "join feature images per clip");
  combine->add_option("--image-dir", image_dir);

  auto* train = app.add_subcommand("train", "train a model on the train split");
  train->add_option("--manifest", manifest);
  train->add_option("--image-dir", image_dir);
  train->add_option("--model", model_path, "output model file");
  train->add_option("--log", log_path, "training log CSV");
  train->add_option("--variant", variant,
                    "logistic, linear_svm, decision_tree, random_forest, small_cnn");

  auto* eval = app.add_subcommand("eval", "score the test split");
  eval->add_option("--manifest", manifest);
  eval->add_option("--image-dir", image_dir);
  eval->add_option("--model", model_path);
  eval->add_option("--report", report_path, "report JSON");

  auto* predict = app.add_subcommand("predict", "classify one WAV");
  std::string wav;
  predict->add_option("--model", model_path);
  predict->add_option("wav", wav, "input WAV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : palmsense::kExitUsage;
  }

  try {
    PipelineConfig cfg;
    if (!config_path.empty()) cfg = palmsense::load_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.train.seed = *seed;
    }
    if (!audio_dir.empty()) cfg.audio_dir = audio_dir;
    if (!image_dir.empty()) cfg.image_dir = image_dir;
    if (!manifest.empty()) cfg.manifest = manifest;
    if (!model_path.empty()) cfg.model_path = model_path;
    if (!log_path.empty()) cfg.log_path = log_path;
    if (!report_path.empty()) cfg.report_path = report_path;
    if (!variant.empty()) cfg.set("model", variant);
    cfg.validate();

    if (*synth) {
      spec.snr_db = {snr, snr};
      if (seed) spec.seed = *seed;
      const auto m = palmsense::synthesize(spec, synth_out, jobs);
      const auto counts = m.class_counts();
      std::cerr << "synth: " << m.records.size() << " clips (" << counts.infested
                << " infested, " << counts.not_infested << " not_infested) in "
                << synth_out << '\n';
      return palmsense::kExitOk;
    }
    if (*extract) {
      return report_batch("extract", palmsense::cmd_extract(cfg, jobs, std::cerr));
    }
    if (*combine) {
      return report_batch("combine", palmsense::cmd_combine(cfg, jobs, std::cerr));
    }
    if (*train) {
      palmsense::cmd_train(cfg, std::cerr);
      std::cerr << "train: wrote " << cfg.model_path.string() << " and "
                << cfg.log_path.string() << '\n';
      return palmsense::kExitOk;
    }
    if (*eval) {
      const auto r = palmsense::cmd_eval(cfg, jobs, std::cerr);
      std::cout << palmsense::report_json(r);
      return palmsense::kExitOk;
    }
    if (*predict) {
      const auto start = std::chrono::steady_clock::now();
      const auto model = palmsense::load_model(cfg.model_path);
      const auto p = palmsense::cmd_predict(cfg, model, wav);
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
      std::cout << palmsense::format_prediction(p) << std::endl;
      std::fprintf(stderr, "elapsed=%.3fs\n", elapsed);
      return palmsense::kExitOk;
    }
  } catch (const palmsense::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return palmsense::kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return palmsense::kExitFailure;
  }
  return palmsense::kExitUsage;
}
