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

#ifndef SEMSLICE_SLICER_HPP_
#define SEMSLICE_SLICER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "semslice/backend.hpp"
#include "semslice/corpus.hpp"
#include "semslice/diagnostics.hpp"
#include "semslice/error.hpp"
#include "semslice/promptgen.hpp"

namespace semslice {

enum class Verdict { kIn, kOut };
enum class ParseStatus { kClean, kNormalized, kUnparseable };

std::string_view ToString(Verdict v);
std::string_view ToString(ParseStatus s);

struct LabelParse {
  Verdict verdict = Verdict::kOut;
  ParseStatus status = ParseStatus::kUnparseable;
  friend bool operator==(const LabelParse&, const LabelParse&) = default;
};

// Total function. Exact "yes"/"no" is clean. After trimming whitespace and
// trailing '.'/'!' a case-insensitive "yes"/"no", or a leading "yes"/"no"
// word ("Yes, because ..."), is normalized. Anything else is unparseable and
// counts as out.
LabelParse ParseLabel(std::string_view raw);

struct SliceAnnotation {
  std::string example_id;
  Verdict verdict = Verdict::kOut;
  std::string raw_output;
  ParseStatus parse_status = ParseStatus::kUnparseable;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double latency_ms = 0.0;
  bool failed = false;  // backend error after retries
};

struct AnnotationRun {
  std::string criterion;
  std::string config_label;
  std::string prompt_ref;     // path of the prompt artifact, if any
  std::string prompt_sha256;  // digest of the serialized prompt
  std::string dataset_name;
  std::string config_snapshot;  // ConfigSnapshot() of the prompt's config
  std::vector<SliceAnnotation> annotations;  // dataset order
  double wall_clock_seconds = 0.0;

  std::size_t count_in() const;
  std::size_t count_unparseable() const;
  std::size_t count_failed() const;
  std::vector<StepUsage> usage() const;  // slice-labeling tokens
};

struct AnnotateOptions {
  int parallelism = 8;
  double max_failure_rate = 0.10;
  int max_output_tokens = 5;
};

class AnnotationAborted : public Error {
 public:
  AnnotationAborted(std::size_t total, std::vector<std::string> failed_ids);
  std::size_t total() const { return total_; }
  const std::vector<std::string>& failed_ids() const { return failed_ids_; }

 private:
  std::size_t total_;
  std::vector<std::string> failed_ids_;
};

// Labels every example with the student model (temperature 0) using up to
// `parallelism` concurrent calls. Results are in dataset order whatever the
// completion order. Throws AnnotationAborted when the failure rate exceeds
// max_failure_rate.
AnnotationRun Annotate(const Dataset& dataset, const SlicingPrompt& prompt,
                       const BackendRole& student,
                       const AnnotateOptions& options = {},
                       Diagnostics* diag = nullptr);

// Members with an "in" verdict, in dataset order. Throws DatasetError if the
// run does not cover exactly this dataset.
Slice ExtractSlice(const Dataset& dataset, const AnnotationRun& run,
                   const std::string& criterion_name);

nlohmann::ordered_json RunHeaderToJson(const AnnotationRun& run);
nlohmann::ordered_json AnnotationToJson(const SliceAnnotation& a);
std::string AnnotationsToJsonl(const AnnotationRun& run);

// Header JSON plus annotations JSONL. Both files are written atomically.
void WriteAnnotationRun(const AnnotationRun& run,
                        const std::filesystem::path& header_path,
                        const std::filesystem::path& jsonl_path);
// Reads a header; the annotations file is resolved relative to it via the
// header's "annotations" field.
AnnotationRun ReadAnnotationRun(const std::filesystem::path& header_path);

}  // namespace semslice

#endif  // SEMSLICE_SLICER_HPP_
