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

#ifndef SEMSLICE_CORPUS_HPP_
#define SEMSLICE_CORPUS_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace semslice {

// One dataset row.
struct Example {
  std::string id;
  std::string text;
  std::optional<std::string> task_label;
  std::optional<std::string> task_prediction;
  // Ground-truth slice membership, keyed by slice name (without "slice:").
  std::map<std::string, bool> gold_slices;
  // Columns that are neither core fields nor slice columns. Kept so that a
  // load/write cycle does not drop user metadata.
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  bool has_task_outcome() const {
    return task_label.has_value() && task_prediction.has_value();
  }
  bool task_correct() const {
    return has_task_outcome() && *task_label == *task_prediction;
  }
};

enum class DataFormat { kJsonl, kCsv };

// Parses "jsonl" / "csv"; throws DatasetError otherwise.
DataFormat ParseDataFormat(std::string_view name);
// Picks a format from the file extension (.csv => csv, everything else jsonl).
DataFormat GuessDataFormat(const std::filesystem::path& path);

// An immutable, ordered collection of examples with unique ids.
class Dataset {
 public:
  // Validates ids (unique), texts (non-blank) and slice keys (must appear in
  // gold_slice_names). Throws DatasetError.
  Dataset(std::string name, std::vector<Example> examples,
          std::set<std::string> gold_slice_names);

  const std::string& name() const { return name_; }
  const std::vector<Example>& examples() const { return examples_; }
  const std::set<std::string>& gold_slice_names() const {
    return gold_slice_names_;
  }
  std::size_t size() const { return examples_.size(); }
  const Example& operator[](std::size_t i) const { return examples_[i]; }

  bool contains(std::string_view id) const;
  // Position of `id` in load order; throws DatasetError if absent.
  std::size_t index_of(std::string_view id) const;
  std::optional<std::size_t> find(std::string_view id) const;
  const Example& at(std::string_view id) const {
    return examples_[index_of(id)];
  }

 private:
  std::string name_;
  std::vector<Example> examples_;
  std::set<std::string> gold_slice_names_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class SliceSource { kGold, kPredicted };

std::string_view ToString(SliceSource source);
SliceSource ParseSliceSource(std::string_view name);

struct Slice {
  std::string criterion_name;
  std::vector<std::string> member_ids;  // dataset order, no duplicates
  SliceSource source = SliceSource::kPredicted;
  // Free-form tag naming the configuration that produced a predicted slice.
  std::string config_label;

  std::size_t size() const { return member_ids.size(); }
  bool empty() const { return member_ids.empty(); }
};

// Reads a dataset. Missing ids become "row-<index>". Columns prefixed with
// "slice:" must hold booleans and define the gold-slice schema. Errors name
// the offending line (JSONL) or record (CSV).
Dataset LoadDataset(const std::filesystem::path& path, DataFormat format);
Dataset LoadDataset(const std::filesystem::path& path);

// Parses dataset content already in memory. `name` becomes Dataset::name().
Dataset ParseJsonl(std::string_view content, std::string name);
Dataset ParseCsv(std::string_view content, std::string name);

void WriteDataset(const Dataset& dataset, const std::filesystem::path& path,
                  DataFormat format);
std::string SerializeJsonl(const Dataset& dataset);
std::string SerializeCsv(const Dataset& dataset);

// Members of gold column `name`. Throws DatasetError for unknown names.
Slice GoldSlice(const Dataset& dataset, const std::string& name);

// Slice membership throws DatasetError for ids not in `dataset`; result is
// reordered to dataset order and de-duplicated.
Slice MakeSlice(const Dataset& dataset, std::string criterion_name,
                const std::vector<std::string>& ids, SliceSource source);

nlohmann::ordered_json SliceToJson(const Slice& slice);
Slice SliceFromJson(const nlohmann::json& j);

}  // namespace semslice

#endif  // SEMSLICE_CORPUS_HPP_
