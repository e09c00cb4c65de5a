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

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include <doctest.h>
#include <json.hpp>

#include "oracles.h"
#include "palmsense/error.h"
#include "palmsense/evaluation.h"

namespace palmsense {
namespace {

// n records, the first n_infested of them infested; ids are not in sorted
// order so the split has to sort them itself.
DatasetManifest synthetic_manifest(std::size_t n, std::size_t n_infested) {
  DatasetManifest m;
  for (std::size_t i = 0; i < n; ++i) {
    ManifestRecord r;
    r.clip_id = "clip_" + std::to_string((i * 7919) % 100003);
    r.audio_path = r.clip_id + ".wav";
    r.label = i < n_infested ? Label::kInfested : Label::kNotInfested;
    m.records.push_back(r);
  }
  return m;
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::size_t count_label(const DatasetManifest& m, const std::vector<std::string>& ids,
                        Label label) {
  std::size_t n = 0;
  for (const auto& id : ids) n += m.find(id)->label == label;
  return n;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("split sizes follow the 80/10/10 floor rule") {
  struct Case {
    std::size_t n, train, val, test;
  };
  for (const Case& c : {Case{1106, 884, 110, 112}, Case{10, 8, 1, 1}, Case{3, 2, 0, 1},
                        Case{200, 160, 20, 20}, Case{19, 15, 1, 3}}) {
    CAPTURE(c.n);
    const auto s = split(synthetic_manifest(c.n, c.n / 2), 0);
    CHECK(s.train.size() == c.train);
    CHECK(s.val.size() == c.val);
    CHECK(s.test.size() == c.test);
  }
}

TEST_CASE("split is a partition and depends only on the seed") {
  const auto m = synthetic_manifest(137, 60);
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL}) {
    const auto s = split(m, seed);
    CHECK(s.seed == seed);
    std::vector<std::string> all = s.train;
    all.insert(all.end(), s.val.begin(), s.val.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::vector<std::string> ids;
    for (const auto& r : m.records) ids.push_back(r.clip_id);
    CHECK(sorted(all) == sorted(ids));
    CHECK(std::set<std::string>(all.begin(), all.end()).size() == all.size());
    const auto again = split(m, seed);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);
  }
  CHECK(split(m, 0).train != split(m, 1).train);

  SUBCASE("record order does not matter") {
    auto shuffled = m;
    std::mt19937_64 gen(3);
    std::shuffle(shuffled.records.begin(), shuffled.records.end(), gen);
    const auto a = split(m, 9);
    const auto b = split(shuffled, 9);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
  }
}

TEST_CASE("stratified split applies the rule per class") {
  const auto m = synthetic_manifest(150, 50);
  const auto s = split(m, 4, /*stratified=*/true);
  CHECK(s.stratified);
  CHECK(count_label(m, s.train, Label::kInfested) == 40);
  CHECK(count_label(m, s.val, Label::kInfested) == 5);
  CHECK(count_label(m, s.test, Label::kInfested) == 5);
  CHECK(count_label(m, s.train, Label::kNotInfested) == 80);
  CHECK(count_label(m, s.val, Label::kNotInfested) == 10);
  CHECK(count_label(m, s.test, Label::kNotInfested) == 10);
  const auto again = split(m, 4, true);
  CHECK(again.train == s.train);
}

TEST_CASE("split errors") {
  CHECK_THROWS_AS(split(synthetic_manifest(2, 1), 0), InputError);
  CHECK_THROWS_AS(split(DatasetManifest{}, 0), InputError);
}

TEST_CASE("confusion matrix counts") {
  using L = Label;
  const std::vector<L> truth = {L::kInfested, L::kInfested, L::kNotInfested,
                                L::kNotInfested, L::kInfested};
  const std::vector<L> pred = {L::kInfested, L::kNotInfested, L::kInfested,
                               L::kNotInfested, L::kInfested};
  const auto cm = confusion(pred, truth);
  CHECK(cm == ConfusionMatrix{2, 1, 1, 1});
  CHECK(cm.total() == 5);
  std::vector<Prediction> scored;
  for (L p : pred) scored.push_back({p, p == L::kInfested ? 0.9 : 0.1});
  CHECK(confusion(scored, truth) == cm);

  SUBCASE("invariant under a common permutation") {
    std::vector<std::size_t> perm = {4, 2, 0, 3, 1};
    std::vector<L> t2, p2;
    for (std::size_t i : perm) {
      t2.push_back(truth[i]);
      p2.push_back(pred[i]);
    }
    CHECK(confusion(p2, t2) == cm);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(confusion(pred, std::vector<L>{L::kInfested}), ArgumentError);
    CHECK_THROWS_AS(confusion(std::vector<L>{}, std::vector<L>{}), ArgumentError);
  }
}

TEST_CASE("metrics reproduce the 36/2/2/0 example") {
  const auto m = metrics(ConfusionMatrix{36, 2, 2, 0});
  CHECK(std::abs(m.accuracy - 0.950) < 5e-4);
  CHECK(std::abs(m.precision - 0.947) < 5e-4);
  CHECK(std::abs(m.recall - 1.000) < 5e-4);
  CHECK(std::abs(m.f1 - 0.973) < 5e-4);
  // Exact fractions.
  CHECK(m.accuracy == 38.0 / 40.0);
  CHECK(m.precision == 36.0 / 38.0);
  CHECK(m.f1 == doctest::Approx(2.0 * 36 / (2.0 * 36 + 2 + 0)));
  CHECK_FALSE(m.precision_undefined);
}

TEST_CASE("metrics degenerate cases") {
  SUBCASE("no predicted positives") {
    const auto m = metrics(ConfusionMatrix{0, 0, 5, 3});
    CHECK(m.precision == 0.0);
    CHECK(m.precision_undefined);
    CHECK(m.recall == 0.0);
    CHECK_FALSE(m.recall_undefined);
    CHECK(m.f1 == 0.0);
    CHECK(m.accuracy == 5.0 / 8.0);
  }
  SUBCASE("no actual positives") {
    const auto m = metrics(ConfusionMatrix{0, 2, 6, 0});
    CHECK(m.recall_undefined);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
  }
  SUBCASE("perfect") {
    const auto m = metrics(ConfusionMatrix{3, 0, 4, 0});
    CHECK(m.accuracy == 1.0);
    CHECK(m.f1 == 1.0);
  }
  CHECK_THROWS_AS(metrics(ConfusionMatrix{}), InputError);
}

TEST_CASE("metrics agree with counting on random label sets") {
  std::mt19937_64 gen(77);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Label> truth, pred;
    for (int i = 0; i < 31; ++i) {
      truth.push_back(coin(gen) ? Label::kInfested : Label::kNotInfested);
      pred.push_back(coin(gen) ? Label::kInfested : Label::kNotInfested);
    }
    const auto cm = confusion(pred, truth);
    CHECK(cm.total() == 31);
    std::size_t correct = 0;
    for (int i = 0; i < 31; ++i) correct += pred[i] == truth[i];
    CHECK(metrics(cm).accuracy == static_cast<double>(correct) / 31.0);
  }
}

TEST_CASE("manifest round trip and lookup") {
  oracle::TempDir dir("manifest");
  DatasetManifest m = synthetic_manifest(6, 3);
  m.records[1].timestamp = "2026-01-01T00:05:00Z";
  for (const auto& r : m.records) write_file(dir / r.audio_path.string(), "x");
  write_manifest(m, dir / "manifest.csv");
  const auto back = read_manifest(dir / "manifest.csv");
  REQUIRE(back.records.size() == 6);
  CHECK(back.base_dir == dir.path());
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(back.records[i].clip_id == m.records[i].clip_id);
    CHECK(back.records[i].audio_path == m.records[i].audio_path);
    CHECK(back.records[i].label == m.records[i].label);
    CHECK(back.records[i].timestamp == m.records[i].timestamp);
  }
  CHECK(back.class_counts().infested == 3);
  CHECK(back.class_counts().not_infested == 3);
  CHECK(back.resolve(back.records[0]) == dir / back.records[0].audio_path.string());
  CHECK(back.find(m.records[2].clip_id) != nullptr);
  CHECK(back.find("nope") == nullptr);
  CHECK_NOTHROW(back.validate());
  std::filesystem::remove(dir / m.records[0].audio_path.string());
  CHECK_THROWS_AS(back.validate(), InputError);
  CHECK_NOTHROW(back.validate(/*check_paths=*/false));
}

TEST_CASE("manifest errors") {
  oracle::TempDir dir("manifest_err");
  write_file(dir / "bad_header.csv", "id,file,label\na,a.wav,infested\n");
  CHECK_THROWS_AS(read_manifest(dir / "bad_header.csv"), FormatError);
  write_file(dir / "bad_label.csv", "clip_id,path,label,timestamp\na,a.wav,maybe,\n");
  CHECK_THROWS_AS(read_manifest(dir / "bad_label.csv"), FormatError);
  write_file(dir / "short.csv", "clip_id,path,label,timestamp\na,a.wav\n");
  CHECK_THROWS_AS(read_manifest(dir / "short.csv"), FormatError);
  CHECK_THROWS_AS(read_manifest(dir / "missing.csv"), IoError);

  DatasetManifest dup = synthetic_manifest(3, 1);
  dup.records[2].clip_id = dup.records[0].clip_id;
  CHECK_THROWS_AS(dup.validate(false), InputError);
  DatasetManifest comma = synthetic_manifest(3, 1);
  comma.records[0].clip_id = "a,b";
  CHECK_THROWS_AS(write_manifest(comma, dir / "c.csv"), ArgumentError);
}

TEST_CASE("report JSON") {
  EvalReport r;
  r.model_variant = "logistic";
  r.seed = 7;
  r.n_train = 160;
  r.n_val = 20;
  r.n_test = 20;
  r.confusion = {9, 1, 10, 0};
  r.metrics = metrics(r.confusion);
  r.digests = {{"pipeline", "abc"}, {"train_config", "def"}};
  const auto text = report_json(r);
  CHECK(text.back() == '\n');
  const auto j = nlohmann::json::parse(text);
  CHECK(j["model_variant"] == "logistic");
  CHECK(j["seed"] == 7);
  CHECK(j["split"]["train"] == 160);
  CHECK(j["split"]["test"] == 20);
  CHECK(j["confusion"]["tp"] == 9);
  CHECK(j["confusion"]["fn"] == 0);
  CHECK(j["metrics"]["accuracy"].get<double>() == r.metrics.accuracy);
  CHECK(j["metrics"]["precision"].get<double>() == 0.9);
  CHECK(j["metrics"]["recall_undefined"] == false);
  CHECK(j["digests"]["pipeline"] == "abc");
  CHECK(report_json(r) == text);
}

TEST_CASE("confusion rendering") {
  const auto a = render_confusion({5, 0, 5, 0});
  CHECK(a.height() == 224);
  CHECK(a.width() == 224);
  // Empty off-diagonal cells are white; populated cells are shaded.
  CHECK(a.at(60, 170) == Rgb{255, 255, 255});
  CHECK(a.at(5, 5) != Rgb{255, 255, 255});
  CHECK(render_confusion({5, 0, 5, 0}) == a);
  CHECK(render_confusion({4, 1, 5, 0}) != a);
}

}  // namespace palmsense
