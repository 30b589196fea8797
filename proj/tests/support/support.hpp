/*
 * Copyright 2026 The semslice Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SEMSLICE_TESTS_SUPPORT_HPP_
#define SEMSLICE_TESTS_SUPPORT_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "semslice/corpus.hpp"
#include "semslice/io.hpp"

namespace semslice::testing {

namespace fs = std::filesystem;

inline fs::path SourceDir() { return fs::path(SEMSLICE_SOURCE_DIR); }
inline fs::path FixturePath(const std::string& rel) {
  return SourceDir() / "tests" / "fixtures" / rel;
}
inline fs::path GoldenPath(const std::string& name) {
  return SourceDir() / "tests" / "golden" / name;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("semslice-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline const std::vector<std::string>& KeywordTerms() {
  static const std::vector<std::string> kTerms{"mosque", "ramadan", "imam",
                                               "quran"};
  return kTerms;
}

// Reference membership rule for the keyword mock script.
inline bool KeywordRule(const std::string& text) {
  const std::string lowered = ToLowerAscii(text);
  for (const auto& t : KeywordTerms()) {
    if (lowered.find(t) != std::string::npos) return true;
  }
  return false;
}

// Short sentences; roughly a third mention one of KeywordTerms(). Every row
// carries a gold "keyword" column equal to KeywordRule.
inline Dataset KeywordCorpus(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> kFiller{
      "the bus",   "a teacher", "my neighbor", "the council", "our team",
      "the chef",  "a cyclist", "the library", "this report", "the market"};
  static const std::vector<std::string> kVerbs{
      "visited", "described", "talked about", "walked past", "wrote about"};
  static const std::vector<std::string> kPlain{
      "the harbor", "a bakery", "the stadium", "an old bridge", "the museum",
      "a vineyard", "the train depot", "a quiet park"};
  static const std::vector<std::string> kTopical{
      "the Mosque downtown", "Ramadan traditions", "the local imam",
      "a Quran study group"};
  std::mt19937_64 rng(seed);
  std::vector<Example> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Example ex;
    ex.id = "ex-" + std::to_string(i);
    const bool topical = rng() % 3 == 0;
    ex.text = kFiller[rng() % kFiller.size()] + " " + kVerbs[rng() % kVerbs.size()] +
              " " +
              (topical ? kTopical[rng() % kTopical.size()]
                       : kPlain[rng() % kPlain.size()]) +
              " on day " + std::to_string(i) + ".";
    ex.gold_slices["keyword"] = KeywordRule(ex.text);
    rows.push_back(std::move(ex));
  }
  return Dataset("keyword", std::move(rows), {"keyword"});
}

inline const std::vector<std::string>& VocabularyA() {
  static const std::vector<std::string> kWords{
      "apple", "banana", "cherry", "grape", "melon", "peach", "plum", "mango"};
  return kWords;
}
inline const std::vector<std::string>& VocabularyB() {
  static const std::vector<std::string> kWords{
      "engine", "piston", "turbine", "gearbox", "axle", "valve", "rotor", "clutch"};
  return kWords;
}

// `per_vocab` texts from each of two disjoint vocabularies, interleaved.
// The "vocab" extra field records which one ("a" or "b").
inline Dataset TwoVocabularyCorpus(std::size_t per_vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Example> rows;
  for (std::size_t i = 0; i < 2 * per_vocab; ++i) {
    const bool a = i % 2 == 0;
    const auto& vocab = a ? VocabularyA() : VocabularyB();
    Example ex;
    ex.id = "t" + std::to_string(i);
    for (int w = 0; w < 6; ++w) {
      if (w > 0) ex.text += " ";
      ex.text += vocab[rng() % vocab.size()];
    }
    ex.extra["vocab"] = a ? "a" : "b";
    rows.push_back(std::move(ex));
  }
  return Dataset("two-vocab", std::move(rows), {});
}

// `total` rows with task outcomes: `total_correct` correct overall, of which
// `slice_correct` fall inside the first `slice_size` rows (gold column
// "planted").
inline Dataset PlantedOutcomeDataset(std::size_t total, std::size_t total_correct,
                                     std::size_t slice_size,
                                     std::size_t slice_correct) {
  std::vector<Example> rows;
  for (std::size_t i = 0; i < total; ++i) {
    Example ex;
    ex.id = "r" + std::to_string(i);
    ex.text = "row " + std::to_string(i);
    const bool in_slice = i < slice_size;
    const bool correct = in_slice
                             ? i < slice_correct
                             : (i - slice_size) < (total_correct - slice_correct);
    ex.task_label = "toxic";
    ex.task_prediction = correct ? "toxic" : "benign";
    ex.gold_slices["planted"] = in_slice;
    rows.push_back(std::move(ex));
  }
  return Dataset("planted", std::move(rows), {"planted"});
}

}  // namespace semslice::testing

#endif  // SEMSLICE_TESTS_SUPPORT_HPP_
