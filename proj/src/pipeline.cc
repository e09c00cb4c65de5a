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

#include "palmsense/pipeline.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <ostream>
#include <set>

#include "palmsense/digest.h"
#include "palmsense/error.h"
#include "palmsense/parallel.h"

namespace palmsense {
namespace {

std::string join_kinds(const std::vector<FeatureKind>& kinds) {
  std::string out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (i > 0) out += ",";
    out += to_string(kinds[i]);
  }
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string part_digest(const PipelineConfig& cfg, FeatureKind kind,
                        const std::vector<std::uint8_t>& audio) {
  Digest d;
  d.add("params", params_digest(kind, cfg.extraction))
      .add("colormap", std::string(to_string(cfg.colormap)))
      .add("audio", std::string_view(reinterpret_cast<const char*>(audio.data()),
                                     audio.size()));
  return d.hex();
}

// params_digest stored in an existing PNG, or "" when unreadable.
std::string stored_digest(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return {};
  try {
    const auto png = load_png(path);
    const auto it = png.text.find("params_digest");
    return it == png.text.end() ? std::string() : it->second;
  } catch (const Error&) {
    return {};
  }
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

// Expected classifier input size for cfg.
std::size_t expected_dim(const PipelineConfig& cfg, ModelVariant variant) {
  const std::size_t w = kImageSize * cfg.features.size();
  const std::size_t f = variant == ModelVariant::kSmallCnn ? CnnModel::kPool
                                                            : cfg.downsample;
  return (kImageSize / f) * (w / f);
}

double cross_entropy(double score, Label label) {
  const double s = std::clamp(score, 1e-12, 1.0 - 1e-12);
  return label == Label::kInfested ? -std::log(s) : -std::log(1.0 - s);
}

EpochRow score_rows(int epoch, const ModelParams& model,
                    const std::vector<CombinedImage>& images,
                    const std::vector<Label>& labels, const PipelineConfig& cfg) {
  EpochRow row;
  row.epoch = epoch;
  if (images.empty()) {
    row.val_accuracy = std::nan("");
    row.val_loss = std::nan("");
    return row;
  }
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Prediction p = classify(model, images[i], cfg);
    correct += p.label == labels[i] ? 1 : 0;
    loss += cross_entropy(p.score, labels[i]);
  }
  const double n = static_cast<double>(images.size());
  row.val_accuracy = static_cast<double>(correct) / n;
  row.val_loss = loss / n;
  return row;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

int BatchResult::exit_code() const {
  if (failures.empty()) return kExitOk;
  return written + skipped > 0 ? kExitPartial : kExitFailure;
}

std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw InputError("audio directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::filesystem::path part_path(const PipelineConfig& cfg,
                                const std::string& stem, FeatureKind kind) {
  return cfg.image_dir / "parts" / (stem + "." + std::string(to_string(kind)) + ".png");
}

std::filesystem::path combined_path(const PipelineConfig& cfg,
                                    const std::string& stem) {
  return image_path(cfg.image_dir, stem);
}

AudioClip canonical_clip(const AudioClip& clip) {
  if (clip.sample_rate_hz() == kCanonicalSampleRateHz) return clip;
  return resample(clip, kCanonicalSampleRateHz);
}

CombinedImage build_combined(const AudioClip& clip, const PipelineConfig& cfg) {
  const AudioClip c = canonical_clip(clip);
  std::vector<FeatureImage> parts;
  for (FeatureKind kind : cfg.features) {
    parts.push_back(render(extract(kind, c, cfg.extraction), cfg.colormap));
  }
  return combine(parts);
}

CombinedImage load_combined(const PipelineConfig& cfg, const std::string& stem) {
  const auto path = combined_path(cfg, stem);
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw InputError("combined image missing for " + stem + ": " + path.string());
  }
  auto png = load_png(path);
  const auto it = png.text.find("feature_order");
  const std::string want = join_kinds(cfg.features);
  if (it == png.text.end() || it->second != want) {
    throw InputError("combined image " + path.string() + " has feature order '" +
                     (it == png.text.end() ? std::string("?") : it->second) +
                     "' but the config lists '" + want + "'");
  }
  if (png.image.height() != kImageSize ||
      png.image.width() != kImageSize * cfg.features.size()) {
    throw InputError("combined image " + path.string() + " has the wrong size");
  }
  CombinedImage out;
  out.pixels = std::move(png.image);
  out.order = cfg.features;
  out.clip_id = stem;
  return out;
}

Prediction classify(const ModelParams& model, const CombinedImage& image,
                    const PipelineConfig& cfg) {
  if (model.variant == ModelVariant::kSmallCnn) return predict(model, image);
  return predict(model, vectorize(image, cfg.downsample));
}

void check_compatible(const ModelParams& model, const PipelineConfig& cfg) {
  const std::string want = cfg.input_digest();
  if (model.input_digest != want) {
    throw InputError("model was trained on feature pipeline " +
                     model.input_digest + " but the config produces " + want);
  }
  const std::size_t dim = expected_dim(cfg, model.variant);
  if (model.input_dim() != dim) {
    throw InputError("model input size " + std::to_string(model.input_dim()) +
                     " (digest " + model.input_digest + ") does not match " +
                     std::to_string(dim) + " (digest " + want + ")");
  }
}

BatchResult cmd_extract(const PipelineConfig& cfg, std::size_t jobs,
                        std::ostream& log) {
  cfg.validate();
  const auto wavs = list_wavs(cfg.audio_dir);
  if (wavs.empty()) {
    throw InputError("no WAV files in " + cfg.audio_dir.string());
  }
  ensure_dir(cfg.image_dir / "parts");

  struct Outcome {
    std::size_t written = 0;
    std::size_t skipped = 0;
    std::optional<std::string> error;
  };
  std::vector<Outcome> outcomes(wavs.size());
  std::mutex log_mu;
  parallel_for(wavs.size(), jobs, [&](std::size_t i) {
    const std::string stem = wavs[i].stem().string();
    Outcome& out = outcomes[i];
    try {
      const auto bytes = read_bytes(wavs[i]);
      std::vector<FeatureKind> todo;
      std::vector<std::string> digests;
      for (FeatureKind kind : cfg.features) {
        const std::string d = part_digest(cfg, kind, bytes);
        if (stored_digest(part_path(cfg, stem, kind)) == d) {
          ++out.skipped;
        } else {
          todo.push_back(kind);
          digests.push_back(d);
        }
      }
      if (!todo.empty()) {
        const AudioClip clip = canonical_clip(parse_wav(bytes, stem));
        for (std::size_t k = 0; k < todo.size(); ++k) {
          const FeatureImage img =
              render(extract(todo[k], clip, cfg.extraction), cfg.colormap);
          save_png(img.pixels, part_path(cfg, stem, todo[k]),
                   {{"clip_id", stem},
                    {"kind", std::string(to_string(todo[k]))},
                    {"params_digest", digests[k]}});
          ++out.written;
        }
      }
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    std::lock_guard<std::mutex> lock(log_mu);
    if (out.error) {
      log << "extract " << stem << ": FAILED: " << *out.error << '\n';
    } else {
      log << "extract " << stem << ": " << out.written << " written, "
          << out.skipped << " up to date\n";
    }
  });

  BatchResult result;
  for (std::size_t i = 0; i < wavs.size(); ++i) {
    if (outcomes[i].error) {
      result.failures.push_back({wavs[i].string(), *outcomes[i].error});
    } else {
      result.written += outcomes[i].written;
      result.skipped += outcomes[i].skipped;
    }
  }
  return result;
}

BatchResult cmd_combine(const PipelineConfig& cfg, std::size_t jobs,
                        std::ostream& log) {
  cfg.validate();
  const auto parts_dir = cfg.image_dir / "parts";
  std::error_code ec;
  if (!std::filesystem::is_directory(parts_dir, ec)) {
    throw InputError("no extracted images under " + parts_dir.string());
  }
  // Stems that have at least one configured part.
  std::set<std::string> stems;
  for (const auto& entry : std::filesystem::directory_iterator(parts_dir)) {
    const std::string name = entry.path().filename().string();
    for (FeatureKind kind : cfg.features) {
      const std::string suffix = "." + std::string(to_string(kind)) + ".png";
      if (name.size() > suffix.size() &&
          name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
        stems.insert(name.substr(0, name.size() - suffix.size()));
      }
    }
  }
  if (stems.empty()) {
    throw InputError("no extracted images for the configured features under " +
                     parts_dir.string());
  }
  const std::vector<std::string> ordered(stems.begin(), stems.end());
  const std::string order = join_kinds(cfg.features);

  struct Outcome {
    bool skipped = false;
    std::optional<std::string> error;
  };
  std::vector<Outcome> outcomes(ordered.size());
  std::mutex log_mu;
  parallel_for(ordered.size(), jobs, [&](std::size_t i) {
    const std::string& stem = ordered[i];
    Outcome& out = outcomes[i];
    try {
      Digest d;
      d.add("feature_order", order);
      std::vector<FeatureImage> images;
      for (FeatureKind kind : cfg.features) {
        const auto path = part_path(cfg, stem, kind);
        if (!std::filesystem::exists(path)) {
          throw InputError("missing " + std::string(to_string(kind)) + " image " +
                           path.string());
        }
        auto png = load_png(path);
        d.add(std::string(to_string(kind)), png.text["params_digest"]);
        FeatureImage img;
        img.pixels = std::move(png.image);
        img.kind = kind;
        img.clip_id = stem;
        images.push_back(std::move(img));
      }
      const auto target = combined_path(cfg, stem);
      if (stored_digest(target) == d.hex()) {
        out.skipped = true;
      } else {
        const CombinedImage combined = combine(images);
        save_png(combined.pixels, target,
                 {{"clip_id", stem},
                  {"feature_order", order},
                  {"params_digest", d.hex()}});
      }
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    std::lock_guard<std::mutex> lock(log_mu);
    if (out.error) {
      log << "combine " << stem << ": FAILED: " << *out.error << '\n';
    } else {
      log << "combine " << stem << ": " << (out.skipped ? "up to date" : "written")
          << '\n';
    }
  });

  BatchResult result;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (outcomes[i].error) {
      result.failures.push_back({ordered[i], *outcomes[i].error});
    } else if (outcomes[i].skipped) {
      ++result.skipped;
    } else {
      ++result.written;
    }
  }
  return result;
}

std::string format_training_log(const std::vector<EpochRow>& rows) {
  std::string out = "epoch,val_accuracy,val_loss\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f\n", r.epoch, r.val_accuracy,
                  r.val_loss);
    out += buf;
  }
  return out;
}

TrainResult cmd_train(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  const DatasetManifest manifest = read_manifest(cfg.manifest);
  manifest.validate(false);
  const ClassCounts counts = manifest.class_counts();
  if (counts.infested == 0 || counts.not_infested == 0) {
    throw DegenerateDataError(
        "manifest needs both classes, got " + std::to_string(counts.infested) +
        " infested and " + std::to_string(counts.not_infested) + " not_infested");
  }

  TrainResult result;
  result.split = split(manifest, cfg.seed, cfg.stratify);
  const auto load = [&](const std::vector<std::string>& ids,
                        std::vector<CombinedImage>& images,
                        std::vector<Label>& labels) {
    for (const auto& id : ids) {
      images.push_back(load_combined(cfg, id));
      labels.push_back(manifest.find(id)->label);
    }
  };
  std::vector<CombinedImage> train_images, val_images;
  std::vector<Label> train_labels, val_labels;
  load(result.split.train, train_images, train_labels);
  load(result.split.val, val_images, val_labels);
  const auto n_pos = static_cast<std::size_t>(
      std::count(train_labels.begin(), train_labels.end(), Label::kInfested));
  if (n_pos == 0 || n_pos == train_labels.size()) {
    throw DegenerateDataError("training split has only one class");
  }
  log << "train: " << to_string(cfg.model) << " on " << train_images.size()
      << " clips (" << n_pos << " infested), " << val_images.size()
      << " validation\n";

  const EpochCallback on_epoch = [&](int epoch, const ModelParams& m) {
    result.log.push_back(score_rows(epoch, m, val_images, val_labels, cfg));
  };

  if (cfg.model == ModelVariant::kSmallCnn) {
    result.model = train_small_cnn(train_images, train_labels, cfg.train, on_epoch);
  } else {
    std::vector<FeatureVector> data;
    for (std::size_t i = 0; i < train_images.size(); ++i) {
      FeatureVector v = vectorize(train_images[i], cfg.downsample);
      v.label = train_labels[i];
      data.push_back(std::move(v));
    }
    switch (cfg.model) {
      case ModelVariant::kLogistic:
        result.model = train_logistic(data, cfg.train, on_epoch);
        break;
      case ModelVariant::kLinearSvm:
        result.model = train_linear_svm(data, cfg.train, on_epoch);
        break;
      case ModelVariant::kDecisionTree:
        result.model = train_decision_tree(data, cfg.train);
        on_epoch(1, result.model);
        break;
      case ModelVariant::kRandomForest:
        result.model = train_random_forest(data, cfg.train);
        on_epoch(1, result.model);
        break;
      case ModelVariant::kSmallCnn:
        break;
    }
  }
  result.model.input_digest = cfg.input_digest();

  if (cfg.model_path.has_parent_path()) ensure_dir(cfg.model_path.parent_path());
  save_model(result.model, cfg.model_path);
  write_text(cfg.log_path, format_training_log(result.log));
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    log << "train: final val_accuracy " << last.val_accuracy << " val_loss "
        << last.val_loss << '\n';
  }
  return result;
}

EvalReport cmd_eval(const PipelineConfig& cfg, std::size_t jobs,
                    std::ostream& log) {
  cfg.validate();
  const ModelParams model = load_model(cfg.model_path);
  check_compatible(model, cfg);
  const DatasetManifest manifest = read_manifest(cfg.manifest);
  const DatasetSplit s = split(manifest, cfg.seed, cfg.stratify);
  if (s.test.empty()) throw InputError("test split is empty");

  std::vector<Prediction> predictions(s.test.size());
  std::vector<Label> labels(s.test.size());
  parallel_for(s.test.size(), jobs, [&](std::size_t i) {
    predictions[i] = classify(model, load_combined(cfg, s.test[i]), cfg);
    labels[i] = manifest.find(s.test[i])->label;
  });

  EvalReport report;
  report.model_variant = std::string(to_string(model.variant));
  report.seed = cfg.seed;
  report.n_train = s.train.size();
  report.n_val = s.val.size();
  report.n_test = s.test.size();
  report.confusion = confusion(predictions, labels);
  report.metrics = metrics(report.confusion);
  report.digests = {{"pipeline", cfg.digest()},
                    {"input", cfg.input_digest()},
                    {"model_input", model.input_digest},
                    {"train_config", model.train_config_digest}};

  write_text(cfg.report_path, report_json(report));
  auto grid_path = cfg.report_path;
  grid_path.replace_filename(cfg.report_path.stem().string() + ".confusion.png");
  save_png(render_confusion(report.confusion), grid_path);
  log << "eval: accuracy " << report.metrics.accuracy << " on " << report.n_test
      << " test clips\n";
  return report;
}

std::string format_prediction(const Prediction& p) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "label=%s score=%.4f",
                std::string(to_string(p.label)).c_str(), p.score);
  return buf;
}

Prediction cmd_predict(const PipelineConfig& cfg, const ModelParams& model,
                       const std::filesystem::path& wav) {
  check_compatible(model, cfg);
  return classify(model, build_combined(load_wav(wav), cfg), cfg);
}

}  // namespace palmsense
