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

#ifndef SEMSLICE_EVAL_HPP_
#define SEMSLICE_EVAL_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "semslice/backend.hpp"
#include "semslice/corpus.hpp"
#include "semslice/diagnostics.hpp"
#include "semslice/slicer.hpp"

namespace semslice {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
};

// Precision/recall/F1 of `predicted` against `gold`. 0/0 counts as 0.
// Throws EvalError when either slice names an id outside `universe`.
PRF SlicePrf(const Slice& predicted, const Slice& gold, const Dataset& universe);

// Fraction of slice members whose prediction equals their label. Throws
// EvalError for an empty slice or a member without label/prediction.
double TaskAccuracy(const Slice& slice, const Dataset& dataset);

// correct / total over the examples that carry both label and prediction.
// nullopt when no example does.
std::optional<double> OverallAccuracy(const Dataset& dataset);

// Rows: in-slice, rest. Columns: task-correct, task-incorrect.
struct ContingencyTable2x2 {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
  std::int64_t d = 0;
};

// Two-sided exact p-value: the total hypergeometric probability of the tables
// with the observed margins that are no more likely than the observed one
// (relative tolerance 1e-12). Throws EvalError for negative entries.
double FisherExactTwoSided(const ContingencyTable2x2& t);

enum class Direction { kWorse, kBetter, kSame };
std::string_view ToString(Direction d);

struct UnderperformanceResult {
  std::string criterion;
  std::string config_label;
  std::size_t size = 0;
  double slice_accuracy = 0.0;
  double overall_accuracy = 0.0;
  ContingencyTable2x2 table;
  double p_value = 1.0;
  bool flagged = false;
  Direction direction = Direction::kSame;
};

// Tests each non-empty slice against the rest of the dataset. A slice is
// flagged when p <= alpha and it is less accurate than the whole dataset.
// Empty slices are skipped with a note. Every example must carry a label and
// a prediction.
std::vector<UnderperformanceResult> DetectUnderperforming(
    std::span<const Slice> slices, const Dataset& dataset, double alpha = 0.05,
    Diagnostics* diag = nullptr);

// ---------------------------------------------------------------------------
// Cost and throughput.

struct ModelPrice {
  double input_per_1m = 0.0;
  double output_per_1m = 0.0;
};

enum class HumanRole { kCrowdworker, kDataScientist };
std::string_view ToString(HumanRole role);
HumanRole ParseHumanRole(std::string_view name);

struct CostModel {
  std::map<std::string, ModelPrice> models;
  double crowdworker_hourly = 0.0;
  double data_scientist_hourly = 0.0;

  double HourlyRate(HumanRole role) const;
};

// Pricing file:
//   {"models": {"<id>": {"input_per_1m": x, "output_per_1m": y}, ...},
//    "human_hourly": {"crowdworker": x, "data_scientist": y}}
// Negative rates are rejected with ConfigError.
CostModel CostModelFromJson(const nlohmann::json& j);
CostModel LoadCostModel(const std::filesystem::path& path);

struct HumanEffort {
  std::string step;
  HumanRole role = HumanRole::kDataScientist;
  double minutes = 0.0;
};

struct StepCost {
  std::string step;
  std::string model_id;  // empty for human-only rows
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double token_cost = 0.0;
  double human_minutes = 0.0;
  double human_cost = 0.0;
  double total() const { return token_cost + human_cost; }
};

struct CostReport {
  std::vector<StepCost> rows;  // token rows then human rows, input order
  double token_cost = 0.0;
  double human_cost = 0.0;
  double total() const { return token_cost + human_cost; }
  // Summed per step name.
  std::map<std::string, double> ByStep() const;
};

// Throws ConfigError for a model id missing from the price table.
CostReport ComputeCostReport(std::span<const StepUsage> usage,
                             const CostModel& prices,
                             std::span<const HumanEffort> human = {});

// Usage fixture / file: {"usage": [...], "human": [{"step", "role",
// "minutes"}]}. Both keys are optional.
struct UsageBundle {
  std::vector<StepUsage> usage;
  std::vector<HumanEffort> human;
};
UsageBundle UsageBundleFromJson(const nlohmann::json& j);

struct ThroughputReport {
  std::size_t annotations = 0;
  double wall_clock_seconds = 0.0;
  double annotations_per_sec = 0.0;
  double tokens_per_annotation = 0.0;
};

// Throws EvalError for an empty run or a zero wall clock.
ThroughputReport ComputeThroughput(const AnnotationRun& run);

// ---------------------------------------------------------------------------
// Reports.

struct SliceEvaluation {
  std::string criterion;
  std::string config_label;
  SliceSource source = SliceSource::kPredicted;
  std::size_t size = 0;
  double fraction = 0.0;
  std::optional<PRF> prf;  // predicted slices with a gold column
  std::optional<UnderperformanceResult> task;
};

struct ThroughputEntry {
  std::string label;
  ThroughputReport throughput;
};

struct EvaluationReport {
  std::string dataset_name;
  std::size_t dataset_size = 0;
  double alpha = 0.05;
  std::optional<double> overall_accuracy;
  std::vector<SliceEvaluation> slices;  // gold slices first, then predicted
  std::vector<StepUsage> usage;
  std::optional<CostReport> cost;
  std::vector<ThroughputEntry> throughput;
  std::vector<std::string> notes;
};

struct EvalOptions {
  double alpha = 0.05;
  // Fail when a predicted slice has no matching gold column.
  bool require_gold = false;
};

// Scores every gold column of `dataset` and every predicted slice. Predicted
// slices are matched to gold columns by criterion name. Task metrics are
// computed only when all examples carry labels and predictions.
EvaluationReport Evaluate(const Dataset& dataset,
                          std::span<const Slice> predicted,
                          const EvalOptions& options = {},
                          Diagnostics* diag = nullptr);

// Mean F1 over the predicted slices carrying `config_label` that have a gold
// column; nullopt when there are none.
std::optional<double> AverageF1(const EvaluationReport& report,
                                const std::string& config_label);

nlohmann::ordered_json ReportToJson(const EvaluationReport& report);

// "**" for p < 0.01, "*" for p < 0.05, otherwise empty.
std::string_view SignificanceStars(double p);

// One row per criterion: fraction of the dataset in the gold slice, F1 per
// configuration, task accuracy of the gold and predicted slices with
// significance stars, and a closing row of average F1.
std::string RenderMarkdownTable(const EvaluationReport& report);

}  // namespace semslice

#endif  // SEMSLICE_EVAL_HPP_
