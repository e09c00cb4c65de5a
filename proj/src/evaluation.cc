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

#include "palmsense/evaluation.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "palmsense/error.h"
#include "palmsense/random.h"

namespace palmsense {
namespace {

constexpr char kManifestHeader[] = "clip_id,path,label,timestamp";

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void check_csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") != std::string::npos) {
    throw ArgumentError("manifest field contains a comma, quote or newline: " + s);
  }
}

// Floor-then-remainder cut of an already shuffled id list.
void cut(const std::vector<std::string>& ids, DatasetSplit& out) {
  const std::size_t n = ids.size();
  const std::size_t n_train = (8 * n) / 10;
  const std::size_t n_val = n / 10;
  out.train.insert(out.train.end(), ids.begin(), ids.begin() + n_train);
  out.val.insert(out.val.end(), ids.begin() + n_train,
                 ids.begin() + n_train + n_val);
  out.test.insert(out.test.end(), ids.begin() + n_train + n_val, ids.end());
}

// 3x5 digit glyphs, one row per string, '#' set.
constexpr std::array<std::array<const char*, 5>, 10> kDigits = {{
    {"###", "#.#", "#.#", "#.#", "###"},
    {".#.", "##.", ".#.", ".#.", "###"},
    {"###", "..#", "###", "#..", "###"},
    {"###", "..#", "###", "..#", "###"},
    {"#.#", "#.#", "###", "..#", "..#"},
    {"###", "#..", "###", "..#", "###"},
    {"###", "#..", "###", "#.#", "###"},
    {"###", "..#", "..#", "..#", "..#"},
    {"###", "#.#", "###", "#.#", "###"},
    {"###", "#.#", "###", "..#", "###"},
}};

void draw_number(RgbImage& img, std::size_t value, std::size_t cy,
                 std::size_t cx, Rgb ink) {
  const std::string text = std::to_string(value);
  constexpr std::size_t kScale = 6;
  const std::size_t glyph_w = 4 * kScale;  // 3 columns plus a gap
  const std::size_t width = text.size() * glyph_w - kScale;
  const std::size_t height = 5 * kScale;
  const std::size_t x0 = cx > width / 2 ? cx - width / 2 : 0;
  const std::size_t y0 = cy > height / 2 ? cy - height / 2 : 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto& glyph = kDigits[static_cast<std::size_t>(text[i] - '0')];
    for (std::size_t gy = 0; gy < 5; ++gy) {
      for (std::size_t gx = 0; gx < 3; ++gx) {
        if (glyph[gy][gx] != '#') continue;
        for (std::size_t dy = 0; dy < kScale; ++dy) {
          for (std::size_t dx = 0; dx < kScale; ++dx) {
            const std::size_t y = y0 + gy * kScale + dy;
            const std::size_t x = x0 + i * glyph_w + gx * kScale + dx;
            if (y < img.height() && x < img.width()) img.set(y, x, ink);
          }
        }
      }
    }
  }
}

}  // namespace

ClassCounts DatasetManifest::class_counts() const {
  ClassCounts c;
  for (const auto& r : records) {
    (r.label == Label::kInfested ? c.infested : c.not_infested) += 1;
  }
  return c;
}

std::filesystem::path DatasetManifest::resolve(const ManifestRecord& r) const {
  if (r.audio_path.is_absolute() || base_dir.empty()) return r.audio_path;
  return base_dir / r.audio_path;
}

const ManifestRecord* DatasetManifest::find(const std::string& clip_id) const {
  for (const auto& r : records) {
    if (r.clip_id == clip_id) return &r;
  }
  return nullptr;
}

void DatasetManifest::validate(bool check_paths) const {
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (r.clip_id.empty()) throw InputError("manifest has an empty clip_id");
    if (!seen.insert(r.clip_id).second) {
      throw InputError("duplicate clip_id in manifest: " + r.clip_id);
    }
    if (check_paths && !std::filesystem::exists(resolve(r))) {
      throw InputError("audio file for " + r.clip_id +
                       " not found: " + resolve(r).string());
    }
  }
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.base_dir = path.parent_path();
  std::string line;
  if (!std::getline(in, line) || trim(line) != kManifestHeader) {
    throw FormatError("manifest " + path.string() + " must start with header " +
                      kManifestHeader);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(trim(line));
    if (fields.size() < 3 || fields.size() > 4) {
      throw FormatError("manifest line " + std::to_string(line_no) +
                        ": expected 3 or 4 fields");
    }
    ManifestRecord r;
    r.clip_id = fields[0];
    r.audio_path = fields[1];
    const auto label = parse_label(fields[2]);
    if (!label) {
      throw FormatError("manifest line " + std::to_string(line_no) +
                        ": unknown label '" + fields[2] + "'");
    }
    r.label = *label;
    if (fields.size() == 4 && !fields[3].empty()) r.timestamp = fields[3];
    m.records.push_back(std::move(r));
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const auto& r : manifest.records) {
    const std::string p = r.audio_path.generic_string();
    check_csv_field(r.clip_id);
    check_csv_field(p);
    if (r.timestamp) check_csv_field(*r.timestamp);
    out << r.clip_id << ',' << p << ',' << to_string(r.label) << ','
        << r.timestamp.value_or("") << '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write manifest " + path.string());
  f << out.str();
  if (!f) throw IoError("write failed: " + path.string());
}

DatasetSplit split(const DatasetManifest& manifest, std::uint64_t seed,
                   bool stratified) {
  const std::size_t n = manifest.records.size();
  if (n < 3) {
    throw InputError("need at least 3 clips to split, got " + std::to_string(n));
  }
  manifest.validate(false);
  DatasetSplit out;
  out.seed = seed;
  out.stratified = stratified;
  Rng rng(seed);
  if (!stratified) {
    std::vector<std::string> ids;
    for (const auto& r : manifest.records) ids.push_back(r.clip_id);
    std::sort(ids.begin(), ids.end());
    rng.shuffle(ids);
    cut(ids, out);
    return out;
  }
  for (Label label : {Label::kNotInfested, Label::kInfested}) {
    std::vector<std::string> ids;
    for (const auto& r : manifest.records) {
      if (r.label == label) ids.push_back(r.clip_id);
    }
    std::sort(ids.begin(), ids.end());
    rng.shuffle(ids);
    cut(ids, out);
  }
  return out;
}

ConfusionMatrix confusion(const std::vector<Label>& predicted,
                          const std::vector<Label>& labels) {
  if (predicted.size() != labels.size()) {
    throw ArgumentError("confusion: " + std::to_string(predicted.size()) +
                        " predictions for " + std::to_string(labels.size()) +
                        " labels");
  }
  if (labels.empty()) throw ArgumentError("confusion: no examples");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predicted[i] == Label::kInfested;
    const bool a = labels[i] == Label::kInfested;
    if (p && a) ++cm.tp;
    else if (p) ++cm.fp;
    else if (a) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

ConfusionMatrix confusion(const std::vector<Prediction>& predictions,
                          const std::vector<Label>& labels) {
  std::vector<Label> predicted;
  predicted.reserve(predictions.size());
  for (const auto& p : predictions) predicted.push_back(p.label);
  return confusion(predicted, labels);
}

Metrics metrics(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw InputError("metrics: confusion matrix is empty");
  Metrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total);
  if (cm.tp + cm.fp == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  }
  if (cm.tp + cm.fn == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  }
  const double s = m.precision + m.recall;
  m.f1 = s > 0.0 ? 2.0 * m.precision * m.recall / s : 0.0;
  return m;
}

std::string report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["model_variant"] = report.model_variant;
  j["seed"] = report.seed;
  j["split"] = {{"train", report.n_train},
                {"val", report.n_val},
                {"test", report.n_test}};
  j["confusion"] = {{"tp", report.confusion.tp},
                    {"fp", report.confusion.fp},
                    {"tn", report.confusion.tn},
                    {"fn", report.confusion.fn}};
  j["metrics"] = {{"accuracy", report.metrics.accuracy},
                  {"precision", report.metrics.precision},
                  {"recall", report.metrics.recall},
                  {"f1", report.metrics.f1},
                  {"precision_undefined", report.metrics.precision_undefined},
                  {"recall_undefined", report.metrics.recall_undefined}};
  nlohmann::ordered_json digests = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.digests) digests[k] = v;
  j["digests"] = digests;
  return j.dump(2) + "\n";
}

RgbImage render_confusion(const ConfusionMatrix& cm) {
  constexpr std::size_t kCell = 112;
  RgbImage img(2 * kCell, 2 * kCell);
  // [actual][predicted], infested first.
  const std::size_t cells[2][2] = {{cm.tp, cm.fn}, {cm.fp, cm.tn}};
  const std::size_t peak = std::max({cm.tp, cm.fn, cm.fp, cm.tn, std::size_t{1}});
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t p = 0; p < 2; ++p) {
      const double t = static_cast<double>(cells[a][p]) / static_cast<double>(peak);
      // White to dark blue.
      const Rgb fill = {
          static_cast<std::uint8_t>(std::lround(255.0 - t * (255.0 - 8.0))),
          static_cast<std::uint8_t>(std::lround(255.0 - t * (255.0 - 48.0))),
          static_cast<std::uint8_t>(std::lround(255.0 - t * (255.0 - 107.0)))};
      for (std::size_t y = 0; y < kCell; ++y) {
        for (std::size_t x = 0; x < kCell; ++x) {
          const bool border = y == 0 || x == 0 || y == kCell - 1 || x == kCell - 1;
          img.set(a * kCell + y, p * kCell + x, border ? Rgb{0, 0, 0} : fill);
        }
      }
      const Rgb ink = t > 0.5 ? Rgb{255, 255, 255} : Rgb{0, 0, 0};
      draw_number(img, cells[a][p], a * kCell + kCell / 2, p * kCell + kCell / 2, ink);
    }
  }
  return img;
}

}  // namespace palmsense
