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

#include "semslice/slicer.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>

#include "semslice/io.hpp"
#include "semslice/runconfig.hpp"

namespace semslice {
namespace {

constexpr std::string_view kRunFormat = "semslice-annotation-run/v1";

std::optional<Verdict> YesNo(std::string_view lowered) {
  if (lowered == "yes") return Verdict::kIn;
  if (lowered == "no") return Verdict::kOut;
  return std::nullopt;
}

std::string FailureTag(const std::exception& e) {
  return std::string("<error: ") + e.what() + ">";
}

}  // namespace

std::string_view ToString(Verdict v) { return v == Verdict::kIn ? "in" : "out"; }

std::string_view ToString(ParseStatus s) {
  switch (s) {
    case ParseStatus::kClean:
      return "clean";
    case ParseStatus::kNormalized:
      return "normalized";
    case ParseStatus::kUnparseable:
      return "unparseable";
  }
  return "unparseable";
}

LabelParse ParseLabel(std::string_view raw) {
  if (raw == "yes") return {Verdict::kIn, ParseStatus::kClean};
  if (raw == "no") return {Verdict::kOut, ParseStatus::kClean};

  std::string_view s = TrimView(raw);
  while (!s.empty() && (s.back() == '.' || s.back() == '!')) {
    s.remove_suffix(1);
    s = TrimView(s);
  }
  const std::string lowered = ToLowerAscii(s);
  if (auto v = YesNo(lowered)) return {*v, ParseStatus::kNormalized};

  std::size_t word_end = 0;
  while (word_end < lowered.size() &&
         std::isalpha(static_cast<unsigned char>(lowered[word_end]))) {
    ++word_end;
  }
  if (word_end < lowered.size()) {
    if (auto v = YesNo(std::string_view(lowered).substr(0, word_end))) {
      return {*v, ParseStatus::kNormalized};
    }
  }
  return {Verdict::kOut, ParseStatus::kUnparseable};
}

std::size_t AnnotationRun::count_in() const {
  return static_cast<std::size_t>(
      std::count_if(annotations.begin(), annotations.end(),
                    [](const auto& a) { return a.verdict == Verdict::kIn; }));
}

std::size_t AnnotationRun::count_unparseable() const {
  return static_cast<std::size_t>(std::count_if(
      annotations.begin(), annotations.end(), [](const auto& a) {
        return a.parse_status == ParseStatus::kUnparseable;
      }));
}

std::size_t AnnotationRun::count_failed() const {
  return static_cast<std::size_t>(
      std::count_if(annotations.begin(), annotations.end(),
                    [](const auto& a) { return a.failed; }));
}

std::vector<StepUsage> AnnotationRun::usage() const {
  StepUsage u;
  u.step = std::string(ToString(PipelineStep::kSliceLabeling));
  nlohmann::json snapshot = nlohmann::json::parse(
      config_snapshot.empty() ? "{}" : config_snapshot);
  u.model_id = snapshot.value("student_model", std::string());
  for (const auto& a : annotations) {
    if (!a.failed) ++u.calls;
    u.input_tokens += a.input_tokens;
    u.output_tokens += a.output_tokens;
  }
  return {u};
}

AnnotationAborted::AnnotationAborted(std::size_t total,
                                     std::vector<std::string> failed_ids)
    : Error("annotation aborted: " + std::to_string(failed_ids.size()) +
            " of " + std::to_string(total) + " examples failed"),
      total_(total),
      failed_ids_(std::move(failed_ids)) {}

AnnotationRun Annotate(const Dataset& dataset, const SlicingPrompt& prompt,
                       const BackendRole& student,
                       const AnnotateOptions& options, Diagnostics* diag) {
  if (dataset.size() == 0) throw ConfigError("cannot annotate an empty dataset");
  if (options.parallelism < 1) {
    throw ConfigError("parallelism must be at least 1");
  }
  if (student.role != Role::kStudent || !student.backend) {
    throw ConfigError("annotation needs a configured student role");
  }

  BackendRole labeler = student;
  labeler.temperature = 0.0;
  labeler.max_output_tokens = options.max_output_tokens;

  AnnotationRun run;
  run.criterion = prompt.criterion.name;
  run.config_label = prompt.config.preset;
  run.prompt_sha256 = Sha256Hex(PromptToJson(prompt).dump());
  run.dataset_name = dataset.name();
  run.config_snapshot = ConfigSnapshot(prompt.config);
  run.annotations.resize(dataset.size());

  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr fatal;
  std::atomic<bool> stop{false};

  auto worker = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= dataset.size()) return;
      const Example& ex = dataset[i];
      SliceAnnotation& a = run.annotations[i];
      a.example_id = ex.id;
      try {
        const auto resp = labeler.Complete(RenderPrompt(prompt, ex.text),
                                           PipelineStep::kSliceLabeling);
        const LabelParse parsed = ParseLabel(resp.text);
        a.verdict = parsed.verdict;
        a.parse_status = parsed.status;
        a.raw_output = resp.text;
        a.input_tokens = resp.input_tokens;
        a.output_tokens = resp.output_tokens;
        a.latency_ms = resp.latency_ms;
      } catch (const BackendError& e) {
        a.failed = true;
        a.verdict = Verdict::kOut;
        a.parse_status = ParseStatus::kUnparseable;
        a.raw_output = FailureTag(e);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!fatal) fatal = std::current_exception();
        stop.store(true);
        return;
      }
    }
  };

  const auto start = std::chrono::steady_clock::now();
  {
    const std::size_t threads = std::min<std::size_t>(
        static_cast<std::size_t>(options.parallelism), dataset.size());
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  run.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  if (fatal) std::rethrow_exception(fatal);

  std::vector<std::string> failed_ids;
  for (const auto& a : run.annotations) {
    if (a.failed) failed_ids.push_back(a.example_id);
  }
  const double failure_rate = static_cast<double>(failed_ids.size()) /
                              static_cast<double>(dataset.size());
  if (failure_rate > options.max_failure_rate) {
    throw AnnotationAborted(dataset.size(), std::move(failed_ids));
  }
  if (!failed_ids.empty()) {
    WarnTo(diag, std::to_string(failed_ids.size()) +
                     " example(s) failed and were marked out");
  }
  const std::size_t unparseable = run.count_unparseable() - failed_ids.size();
  if (unparseable > 0) {
    WarnTo(diag, std::to_string(unparseable) +
                     " model output(s) were unparseable and marked out");
  }
  return run;
}

Slice ExtractSlice(const Dataset& dataset, const AnnotationRun& run,
                   const std::string& criterion_name) {
  if (run.annotations.size() != dataset.size()) {
    throw DatasetError("annotation run has " +
                       std::to_string(run.annotations.size()) +
                       " annotations but dataset '" + dataset.name() + "' has " +
                       std::to_string(dataset.size()) + " examples");
  }
  Slice slice{criterion_name, {}, SliceSource::kPredicted, run.config_label};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& a = run.annotations[i];
    if (a.example_id != dataset[i].id) {
      throw DatasetError("annotation " + std::to_string(i) + " is for id '" +
                         a.example_id + "' but the dataset has '" +
                         dataset[i].id + "'");
    }
    if (a.verdict == Verdict::kIn) slice.member_ids.push_back(a.example_id);
  }
  return slice;
}

nlohmann::ordered_json AnnotationToJson(const SliceAnnotation& a) {
  nlohmann::ordered_json j;
  j["id"] = a.example_id;
  j["verdict"] = ToString(a.verdict);
  j["raw_output"] = a.raw_output;
  j["parse_status"] = ToString(a.parse_status);
  j["failed"] = a.failed;
  j["input_tokens"] = a.input_tokens;
  j["output_tokens"] = a.output_tokens;
  j["latency_ms"] = a.latency_ms;
  return j;
}

std::string AnnotationsToJsonl(const AnnotationRun& run) {
  std::string out;
  for (const auto& a : run.annotations) {
    out += AnnotationToJson(a).dump();
    out.push_back('\n');
  }
  return out;
}

nlohmann::ordered_json RunHeaderToJson(const AnnotationRun& run) {
  nlohmann::ordered_json j;
  j["format"] = kRunFormat;
  j["criterion"] = run.criterion;
  j["config_label"] = run.config_label;
  j["prompt_ref"] = run.prompt_ref;
  j["prompt_sha256"] = run.prompt_sha256;
  j["dataset"] = run.dataset_name;
  j["size"] = run.annotations.size();
  j["count_in"] = run.count_in();
  j["count_out"] = run.annotations.size() - run.count_in();
  j["count_unparseable"] = run.count_unparseable();
  j["count_failed"] = run.count_failed();
  j["wall_clock_seconds"] = run.wall_clock_seconds;
  j["config"] = nlohmann::ordered_json::parse(
      run.config_snapshot.empty() ? "null" : run.config_snapshot);
  UsageLedger ledger;
  for (const auto& u : run.usage()) ledger.Add(u);
  j["usage"] = ledger.ToJson();
  return j;
}

void WriteAnnotationRun(const AnnotationRun& run,
                        const std::filesystem::path& header_path,
                        const std::filesystem::path& jsonl_path) {
  WriteFileAtomic(jsonl_path, AnnotationsToJsonl(run));
  auto header = RunHeaderToJson(run);
  header["annotations"] = jsonl_path.filename().string();
  WriteFileAtomic(header_path, header.dump(2) + "\n");
}

AnnotationRun ReadAnnotationRun(const std::filesystem::path& header_path) {
  AnnotationRun run;
  try {
    const auto header = nlohmann::ordered_json::parse(ReadFile(header_path));
    if (header.value("format", std::string()) != kRunFormat) {
      throw DatasetError(header_path.string() + " is not an annotation run");
    }
    run.criterion = header.at("criterion").get<std::string>();
    run.config_label = header.value("config_label", std::string());
    run.prompt_ref = header.value("prompt_ref", std::string());
    run.prompt_sha256 = header.value("prompt_sha256", std::string());
    run.dataset_name = header.at("dataset").get<std::string>();
    run.wall_clock_seconds = header.at("wall_clock_seconds").get<double>();
    if (!header.at("config").is_null()) {
      run.config_snapshot = header.at("config").dump();
    }
    const auto jsonl_path =
        header_path.parent_path() / header.at("annotations").get<std::string>();
    const std::string content = ReadFile(jsonl_path);
    std::size_t start = 0;
    while (start < content.size()) {
      auto end = content.find('\n', start);
      if (end == std::string::npos) end = content.size();
      const std::string_view line(content.data() + start, end - start);
      start = end + 1;
      if (TrimView(line).empty()) continue;
      const auto j = nlohmann::json::parse(line);
      SliceAnnotation a;
      a.example_id = j.at("id").get<std::string>();
      a.verdict = j.at("verdict").get<std::string>() == "in" ? Verdict::kIn
                                                             : Verdict::kOut;
      a.raw_output = j.at("raw_output").get<std::string>();
      const std::string status = j.at("parse_status").get<std::string>();
      a.parse_status = status == "clean"        ? ParseStatus::kClean
                       : status == "normalized" ? ParseStatus::kNormalized
                                                : ParseStatus::kUnparseable;
      a.failed = j.value("failed", false);
      a.input_tokens = j.at("input_tokens").get<std::int64_t>();
      a.output_tokens = j.at("output_tokens").get<std::int64_t>();
      a.latency_ms = j.value("latency_ms", 0.0);
      run.annotations.push_back(std::move(a));
    }
    if (run.annotations.size() != header.at("size").get<std::size_t>()) {
      throw DatasetError("annotation file " + jsonl_path.string() +
                         " is truncated");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("malformed annotation run " + header_path.string() +
                       ": " + e.what());
  } catch (const DatasetError&) {
    throw;
  } catch (const Error& e) {
    throw DatasetError(e.what());
  }
  return run;
}

}  // namespace semslice
