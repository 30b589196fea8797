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

#include "semslice/corpus.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "semslice/error.hpp"
#include "semslice/io.hpp"

namespace semslice {
namespace {

constexpr std::string_view kSlicePrefix = "slice:";

bool IsSliceColumn(std::string_view key) {
  return key.size() > kSlicePrefix.size() && key.starts_with(kSlicePrefix);
}

// Categorical values may arrive as strings, numbers or booleans.
std::optional<std::string> CategoricalFromJson(const nlohmann::json& value,
                                               std::string_view field,
                                               const std::string& where) {
  if (value.is_null()) return std::nullopt;
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number() || value.is_boolean()) return value.dump();
  throw DatasetError(where + ": field '" + std::string(field) +
                     "' must be a string, number or boolean");
}

std::optional<bool> ParseCsvBool(std::string_view cell) {
  const std::string lowered = ToLowerAscii(TrimView(cell));
  if (lowered == "true" || lowered == "1") return true;
  if (lowered == "false" || lowered == "0") return false;
  return std::nullopt;
}

struct CsvRecord {
  std::vector<std::string> cells;
  std::size_t line = 0;  // 1-based line where the record starts
};

// RFC 4180 reader: quoted fields may contain commas, quotes ("") and newlines.
std::vector<CsvRecord> ReadCsvRecords(std::string_view content) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string cell;
  bool in_quotes = false;
  bool cell_started = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_cell = [&] {
    current.cells.push_back(std::move(cell));
    cell.clear();
    cell_started = false;
  };
  auto end_record = [&] {
    end_cell();
    const bool blank = current.cells.size() == 1 && current.cells[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = CsvRecord{};
    current.line = line;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cell.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (cell_started && !cell.empty()) {
          throw DatasetError("line " + std::to_string(line) +
                             ": stray quote inside unquoted CSV field");
        }
        in_quotes = true;
        cell_started = true;
        break;
      case ',':
        end_cell();
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        cell.push_back(c);
        cell_started = true;
    }
  }
  if (in_quotes) {
    throw DatasetError("line " + std::to_string(current.line) +
                       ": unterminated quoted CSV field");
  }
  if (cell_started || !cell.empty() || !current.cells.empty()) end_record();
  return records;
}

std::string CsvEscape(std::string_view value) {
  const bool needs_quotes =
      value.find_first_of(",\"\r\n") != std::string_view::npos ||
      (!value.empty() && (value.front() == ' ' || value.back() == ' '));
  if (!needs_quotes) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

DataFormat ParseDataFormat(std::string_view name) {
  const std::string lowered = ToLowerAscii(name);
  if (lowered == "jsonl") return DataFormat::kJsonl;
  if (lowered == "csv") return DataFormat::kCsv;
  throw DatasetError("unknown dataset format '" + std::string(name) +
                     "' (expected jsonl or csv)");
}

DataFormat GuessDataFormat(const std::filesystem::path& path) {
  return ToLowerAscii(path.extension().string()) == ".csv" ? DataFormat::kCsv
                                                           : DataFormat::kJsonl;
}

Dataset::Dataset(std::string name, std::vector<Example> examples,
                 std::set<std::string> gold_slice_names)
    : name_(std::move(name)),
      examples_(std::move(examples)),
      gold_slice_names_(std::move(gold_slice_names)) {
  if (examples_.empty()) throw DatasetError("dataset '" + name_ + "' is empty");
  index_.reserve(examples_.size());
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const Example& ex = examples_[i];
    if (ex.id.empty()) {
      throw DatasetError("example " + std::to_string(i) + " has an empty id");
    }
    if (TrimView(ex.text).empty()) {
      throw DatasetError("example '" + ex.id + "' has empty text");
    }
    for (const auto& [slice, unused] : ex.gold_slices) {
      if (!gold_slice_names_.contains(slice)) {
        throw DatasetError("example '" + ex.id + "' uses undeclared slice '" +
                           slice + "'");
      }
    }
    if (!index_.emplace(ex.id, i).second) {
      throw DatasetError("duplicate id '" + ex.id + "'");
    }
  }
}

bool Dataset::contains(std::string_view id) const {
  return index_.contains(std::string(id));
}

std::optional<std::size_t> Dataset::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Dataset::index_of(std::string_view id) const {
  if (auto pos = find(id)) return *pos;
  throw DatasetError("id '" + std::string(id) + "' is not in dataset '" +
                     name_ + "'");
}

std::string_view ToString(SliceSource source) {
  return source == SliceSource::kGold ? "gold" : "predicted";
}

SliceSource ParseSliceSource(std::string_view name) {
  if (name == "gold") return SliceSource::kGold;
  if (name == "predicted") return SliceSource::kPredicted;
  throw DatasetError("unknown slice source '" + std::string(name) + "'");
}

Dataset ParseJsonl(std::string_view content, std::string name) {
  std::vector<Example> examples;
  std::set<std::string> slice_names;
  std::unordered_set<std::string> seen_ids;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (TrimView(line).empty()) {
      if (end == content.size()) break;
      continue;
    }
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::ordered_json record;
    try {
      record = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DatasetError(where + ": invalid JSON: " + e.what());
    }
    if (!record.is_object()) {
      throw DatasetError(where + ": record must be a JSON object");
    }

    Example ex;
    bool has_text = false;
    for (auto it = record.begin(); it != record.end(); ++it) {
      const std::string& key = it.key();
      const auto& value = it.value();
      if (key == "id") {
        if (value.is_string()) {
          ex.id = value.get<std::string>();
        } else if (value.is_number_integer()) {
          ex.id = value.dump();
        } else {
          throw DatasetError(where + ": 'id' must be a string or integer");
        }
      } else if (key == "text") {
        if (!value.is_string()) {
          throw DatasetError(where + ": 'text' must be a string");
        }
        ex.text = value.get<std::string>();
        has_text = true;
      } else if (key == "label") {
        ex.task_label = CategoricalFromJson(value, key, where);
      } else if (key == "prediction") {
        ex.task_prediction = CategoricalFromJson(value, key, where);
      } else if (IsSliceColumn(key)) {
        if (!value.is_boolean()) {
          throw DatasetError(where + ": column '" + key +
                             "' must hold a boolean");
        }
        const std::string slice = key.substr(kSlicePrefix.size());
        ex.gold_slices[slice] = value.get<bool>();
        slice_names.insert(slice);
      } else {
        ex.extra[key] = value;
      }
    }
    if (!has_text) throw DatasetError(where + ": missing 'text' field");
    if (TrimView(ex.text).empty()) throw DatasetError(where + ": empty text");
    if (!record.contains("id")) {
      ex.id = "row-" + std::to_string(examples.size());
    }
    if (!seen_ids.insert(ex.id).second) {
      throw DatasetError(where + ": duplicate id '" + ex.id + "'");
    }
    examples.push_back(std::move(ex));
    if (end == content.size()) break;
  }
  return Dataset(std::move(name), std::move(examples), std::move(slice_names));
}

Dataset ParseCsv(std::string_view content, std::string name) {
  std::vector<CsvRecord> records = ReadCsvRecords(content);
  if (records.empty()) throw DatasetError("CSV input has no header row");
  const std::vector<std::string> header = std::move(records.front().cells);
  const auto text_col = std::find(header.begin(), header.end(), "text");
  if (text_col == header.end()) {
    throw DatasetError("CSV header has no 'text' column");
  }
  std::set<std::string> slice_names;
  for (const auto& column : header) {
    if (IsSliceColumn(column)) {
      slice_names.insert(column.substr(kSlicePrefix.size()));
    }
  }
  const bool has_id_column =
      std::find(header.begin(), header.end(), "id") != header.end();

  std::vector<Example> examples;
  std::unordered_set<std::string> seen_ids;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const CsvRecord& record = records[r];
    const std::string where = "line " + std::to_string(record.line);
    if (record.cells.size() != header.size()) {
      throw DatasetError(where + ": expected " + std::to_string(header.size()) +
                         " columns, found " +
                         std::to_string(record.cells.size()));
    }
    Example ex;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const std::string& column = header[c];
      const std::string& cell = record.cells[c];
      if (column == "id") {
        ex.id = cell;
      } else if (column == "text") {
        ex.text = cell;
      } else if (column == "label") {
        if (!cell.empty()) ex.task_label = cell;
      } else if (column == "prediction") {
        if (!cell.empty()) ex.task_prediction = cell;
      } else if (IsSliceColumn(column)) {
        if (cell.empty()) continue;
        const auto value = ParseCsvBool(cell);
        if (!value) {
          throw DatasetError(where + ": column '" + column +
                             "' must hold a boolean, got '" + cell + "'");
        }
        ex.gold_slices[column.substr(kSlicePrefix.size())] = *value;
      } else if (!cell.empty()) {
        ex.extra[column] = cell;
      }
    }
    if (TrimView(ex.text).empty()) throw DatasetError(where + ": empty text");
    if (!has_id_column || ex.id.empty()) {
      ex.id = "row-" + std::to_string(examples.size());
    }
    if (!seen_ids.insert(ex.id).second) {
      throw DatasetError(where + ": duplicate id '" + ex.id + "'");
    }
    examples.push_back(std::move(ex));
  }
  return Dataset(std::move(name), std::move(examples), std::move(slice_names));
}

Dataset LoadDataset(const std::filesystem::path& path, DataFormat format) {
  std::string content;
  try {
    content = ReadFile(path);
  } catch (const Error& e) {
    throw DatasetError(e.what());
  }
  std::string name = path.stem().string();
  try {
    return format == DataFormat::kCsv ? ParseCsv(content, std::move(name))
                                      : ParseJsonl(content, std::move(name));
  } catch (const DatasetError& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
}

Dataset LoadDataset(const std::filesystem::path& path) {
  return LoadDataset(path, GuessDataFormat(path));
}

std::string SerializeJsonl(const Dataset& dataset) {
  std::string out;
  for (const Example& ex : dataset.examples()) {
    nlohmann::ordered_json j;
    j["id"] = ex.id;
    j["text"] = ex.text;
    if (ex.task_label) j["label"] = *ex.task_label;
    if (ex.task_prediction) j["prediction"] = *ex.task_prediction;
    for (const auto& [slice, member] : ex.gold_slices) {
      j[std::string(kSlicePrefix) + slice] = member;
    }
    for (auto it = ex.extra.begin(); it != ex.extra.end(); ++it) {
      j[it.key()] = it.value();
    }
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

std::string SerializeCsv(const Dataset& dataset) {
  bool any_label = false;
  bool any_prediction = false;
  std::vector<std::string> extra_columns;
  for (const Example& ex : dataset.examples()) {
    any_label |= ex.task_label.has_value();
    any_prediction |= ex.task_prediction.has_value();
    for (auto it = ex.extra.begin(); it != ex.extra.end(); ++it) {
      if (std::find(extra_columns.begin(), extra_columns.end(), it.key()) ==
          extra_columns.end()) {
        extra_columns.push_back(it.key());
      }
    }
  }
  std::vector<std::string> header = {"id", "text"};
  if (any_label) header.push_back("label");
  if (any_prediction) header.push_back("prediction");
  for (const auto& slice : dataset.gold_slice_names()) {
    header.push_back(std::string(kSlicePrefix) + slice);
  }
  header.insert(header.end(), extra_columns.begin(), extra_columns.end());

  std::ostringstream out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    out << (c ? "," : "") << CsvEscape(header[c]);
  }
  out << '\n';
  for (const Example& ex : dataset.examples()) {
    std::vector<std::string> row = {ex.id, ex.text};
    if (any_label) row.push_back(ex.task_label.value_or(""));
    if (any_prediction) row.push_back(ex.task_prediction.value_or(""));
    for (const auto& slice : dataset.gold_slice_names()) {
      const auto it = ex.gold_slices.find(slice);
      row.push_back(it == ex.gold_slices.end() ? ""
                                               : (it->second ? "true" : "false"));
    }
    for (const auto& column : extra_columns) {
      if (!ex.extra.contains(column)) {
        row.emplace_back();
      } else if (ex.extra[column].is_string()) {
        row.push_back(ex.extra[column].get<std::string>());
      } else {
        row.push_back(ex.extra[column].dump());
      }
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c ? "," : "") << CsvEscape(row[c]);
    }
    out << '\n';
  }
  return out.str();
}

void WriteDataset(const Dataset& dataset, const std::filesystem::path& path,
                  DataFormat format) {
  WriteFileAtomic(path, format == DataFormat::kCsv ? SerializeCsv(dataset)
                                                   : SerializeJsonl(dataset));
}

Slice GoldSlice(const Dataset& dataset, const std::string& name) {
  if (!dataset.gold_slice_names().contains(name)) {
    throw DatasetError("unknown gold slice '" + name + "' in dataset '" +
                       dataset.name() + "'");
  }
  Slice slice{name, {}, SliceSource::kGold, "gold"};
  for (const Example& ex : dataset.examples()) {
    const auto it = ex.gold_slices.find(name);
    if (it != ex.gold_slices.end() && it->second) {
      slice.member_ids.push_back(ex.id);
    }
  }
  return slice;
}

Slice MakeSlice(const Dataset& dataset, std::string criterion_name,
                const std::vector<std::string>& ids, SliceSource source) {
  std::vector<std::size_t> positions;
  positions.reserve(ids.size());
  for (const auto& id : ids) positions.push_back(dataset.index_of(id));
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()),
                  positions.end());
  Slice slice{std::move(criterion_name), {}, source, ""};
  slice.member_ids.reserve(positions.size());
  for (std::size_t pos : positions) slice.member_ids.push_back(dataset[pos].id);
  return slice;
}

nlohmann::ordered_json SliceToJson(const Slice& slice) {
  nlohmann::ordered_json j;
  j["criterion"] = slice.criterion_name;
  j["source"] = ToString(slice.source);
  j["config_label"] = slice.config_label;
  j["size"] = slice.member_ids.size();
  j["member_ids"] = slice.member_ids;
  return j;
}

Slice SliceFromJson(const nlohmann::json& j) {
  try {
    Slice slice;
    slice.criterion_name = j.at("criterion").get<std::string>();
    slice.source = ParseSliceSource(j.at("source").get<std::string>());
    slice.config_label = j.value("config_label", std::string());
    slice.member_ids = j.at("member_ids").get<std::vector<std::string>>();
    return slice;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("malformed slice file: ") + e.what());
  }
}

}  // namespace semslice
