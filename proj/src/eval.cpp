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

#include "semslice/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "semslice/io.hpp"

namespace semslice {
namespace {

constexpr double kTieTolerance = 1e-12;

std::vector<double> LogFactorials(std::int64_t n) {
  std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::int64_t i = 2; i <= n; ++i) {
    out[static_cast<std::size_t>(i)] = std::lgamma(static_cast<double>(i) + 1.0);
  }
  return out;
}

std::unordered_set<std::string_view> MemberSet(const Slice& slice,
                                               const Dataset& universe,
                                               std::string_view role) {
  std::unordered_set<std::string_view> out;
  for (const auto& id : slice.member_ids) {
    if (!universe.contains(id)) {
      throw EvalError(std::string(role) + " slice '" + slice.criterion_name +
                      "' names id '" + id + "' which is not in dataset '" +
                      universe.name() + "'");
    }
    out.insert(id);
  }
  return out;
}

double Ratio(std::int64_t num, std::int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void RequireOutcome(const Example& ex) {
  if (!ex.has_task_outcome()) {
    throw EvalError("example '" + ex.id + "' has no task " +
                    (ex.task_label ? "prediction" : "label"));
  }
}

double NonNegative(const nlohmann::json& j, const char* key,
                   const std::string& where) {
  const double v = j.at(key).get<double>();
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw ConfigError(where + "." + key + " must be a non-negative number");
  }
  return v;
}

std::string ConfigColumn(const std::string& label) {
  return label.empty() ? "predicted" : label;
}

}  // namespace

PRF SlicePrf(const Slice& predicted, const Slice& gold,
             const Dataset& universe) {
  const auto pred = MemberSet(predicted, universe, "predicted");
  const auto truth = MemberSet(gold, universe, "gold");
  PRF r;
  for (const auto& id : pred) {
    if (truth.count(id)) {
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = static_cast<std::int64_t>(truth.size()) - r.tp;
  r.precision = Ratio(r.tp, r.tp + r.fp);
  r.recall = Ratio(r.tp, r.tp + r.fn);
  const double sum = r.precision + r.recall;
  r.f1 = sum > 0.0 ? 2.0 * r.precision * r.recall / sum : 0.0;
  return r;
}

double TaskAccuracy(const Slice& slice, const Dataset& dataset) {
  if (slice.empty()) {
    throw EvalError("task accuracy of empty slice '" + slice.criterion_name +
                    "' is undefined");
  }
  std::int64_t correct = 0;
  for (const auto& id : slice.member_ids) {
    const auto idx = dataset.find(id);
    if (!idx) {
      throw EvalError("slice '" + slice.criterion_name + "' names unknown id '" +
                      id + "'");
    }
    const Example& ex = dataset[*idx];
    RequireOutcome(ex);
    if (ex.task_correct()) ++correct;
  }
  return Ratio(correct, static_cast<std::int64_t>(slice.size()));
}

std::optional<double> OverallAccuracy(const Dataset& dataset) {
  std::int64_t total = 0;
  std::int64_t correct = 0;
  for (const auto& ex : dataset.examples()) {
    if (!ex.has_task_outcome()) continue;
    ++total;
    if (ex.task_correct()) ++correct;
  }
  if (total == 0) return std::nullopt;
  return Ratio(correct, total);
}

double FisherExactTwoSided(const ContingencyTable2x2& t) {
  if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0) {
    throw EvalError(fmt::format("contingency table has a negative entry: "
                                "[[{}, {}], [{}, {}]]",
                                t.a, t.b, t.c, t.d));
  }
  const std::int64_t row1 = t.a + t.b;
  const std::int64_t row2 = t.c + t.d;
  const std::int64_t col1 = t.a + t.c;
  const std::int64_t n = row1 + row2;
  if (row1 == 0 || row2 == 0 || col1 == 0 || col1 == n) return 1.0;

  const auto lf = LogFactorials(n);
  const auto at = [&](std::int64_t i) { return lf[static_cast<std::size_t>(i)]; };
  // The table-dependent part of log P, summed in sorted order so that tables
  // related by a permutation of cells get bit-identical values.
  const auto cells = [&](std::int64_t a) {
    std::array<double, 4> v{at(a), at(row1 - a), at(col1 - a),
                            at(row2 - col1 + a)};
    std::sort(v.begin(), v.end());
    return -(((v[0] + v[1]) + v[2]) + v[3]);
  };
  const double log_norm = at(row1) + at(row2) + at(col1) + at(n - col1) - at(n);

  const std::int64_t lo = std::max<std::int64_t>(0, col1 - row2);
  const std::int64_t hi = std::min(row1, col1);
  const double observed = cells(t.a);
  const double threshold = observed + std::log1p(kTieTolerance);
  double p = 0.0;
  for (std::int64_t a = lo; a <= hi; ++a) {
    const double v = cells(a);
    if (v <= threshold) p += std::exp(log_norm + v);
  }
  return std::clamp(p, 0.0, 1.0);
}

std::string_view ToString(Direction d) {
  switch (d) {
    case Direction::kWorse:
      return "worse";
    case Direction::kBetter:
      return "better";
    case Direction::kSame:
      return "same";
  }
  return "same";
}

std::vector<UnderperformanceResult> DetectUnderperforming(
    std::span<const Slice> slices, const Dataset& dataset, double alpha,
    Diagnostics* diag) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw EvalError("alpha must lie in (0, 1)");
  }
  std::int64_t total_correct = 0;
  for (const auto& ex : dataset.examples()) {
    RequireOutcome(ex);
    if (ex.task_correct()) ++total_correct;
  }
  const auto n = static_cast<std::int64_t>(dataset.size());
  const double overall = Ratio(total_correct, n);

  std::vector<UnderperformanceResult> out;
  for (const auto& slice : slices) {
    if (slice.empty()) {
      WarnTo(diag, "slice '" + slice.criterion_name +
                       "' is empty; skipped significance test");
      continue;
    }
    UnderperformanceResult r;
    r.criterion = slice.criterion_name;
    r.config_label = slice.config_label;
    r.size = slice.size();
    r.overall_accuracy = overall;
    const auto size = static_cast<std::int64_t>(slice.size());
    for (const auto& id : slice.member_ids) {
      const auto idx = dataset.find(id);
      if (!idx) {
        throw EvalError("slice '" + slice.criterion_name +
                        "' names unknown id '" + id + "'");
      }
      if (dataset[*idx].task_correct()) ++r.table.a;
    }
    r.slice_accuracy = Ratio(r.table.a, size);
    r.table.b = size - r.table.a;
    r.table.c = total_correct - r.table.a;
    r.table.d = (n - size) - r.table.c;
    r.p_value = FisherExactTwoSided(r.table);
    if (r.slice_accuracy < overall) {
      r.direction = Direction::kWorse;
    } else if (r.slice_accuracy > overall) {
      r.direction = Direction::kBetter;
    }
    r.flagged = r.p_value <= alpha && r.direction == Direction::kWorse;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view ToString(HumanRole role) {
  return role == HumanRole::kCrowdworker ? "crowdworker" : "data_scientist";
}

HumanRole ParseHumanRole(std::string_view name) {
  if (name == "crowdworker") return HumanRole::kCrowdworker;
  if (name == "data_scientist") return HumanRole::kDataScientist;
  throw ConfigError("unknown human role '" + std::string(name) +
                    "' (expected crowdworker or data_scientist)");
}

double CostModel::HourlyRate(HumanRole role) const {
  return role == HumanRole::kCrowdworker ? crowdworker_hourly
                                         : data_scientist_hourly;
}

CostModel CostModelFromJson(const nlohmann::json& j) {
  CostModel m;
  try {
    for (const auto& [id, price] : j.at("models").items()) {
      const std::string where = "models." + id;
      m.models[id] = ModelPrice{NonNegative(price, "input_per_1m", where),
                                NonNegative(price, "output_per_1m", where)};
    }
    if (j.contains("human_hourly")) {
      const auto& h = j.at("human_hourly");
      m.crowdworker_hourly = NonNegative(h, "crowdworker", "human_hourly");
      m.data_scientist_hourly = NonNegative(h, "data_scientist", "human_hourly");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed pricing file: ") + e.what());
  }
  return m;
}

CostModel LoadCostModel(const std::filesystem::path& path) {
  try {
    return CostModelFromJson(nlohmann::json::parse(ReadFile(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::map<std::string, double> CostReport::ByStep() const {
  std::map<std::string, double> out;
  for (const auto& r : rows) out[r.step] += r.total();
  return out;
}

CostReport ComputeCostReport(std::span<const StepUsage> usage,
                             const CostModel& prices,
                             std::span<const HumanEffort> human) {
  CostReport report;
  for (const auto& u : usage) {
    const auto it = prices.models.find(u.model_id);
    if (it == prices.models.end()) {
      throw ConfigError("no price for model '" + u.model_id + "' (step " +
                        u.step + ")");
    }
    StepCost row;
    row.step = u.step;
    row.model_id = u.model_id;
    row.input_tokens = u.input_tokens;
    row.output_tokens = u.output_tokens;
    row.token_cost =
        static_cast<double>(u.input_tokens) * (it->second.input_per_1m / 1e6) +
        static_cast<double>(u.output_tokens) * (it->second.output_per_1m / 1e6);
    report.token_cost += row.token_cost;
    report.rows.push_back(std::move(row));
  }
  for (const auto& h : human) {
    if (!(h.minutes >= 0.0)) {
      throw ConfigError("human minutes for step " + h.step +
                        " must be non-negative");
    }
    StepCost row;
    row.step = h.step;
    row.human_minutes = h.minutes;
    row.human_cost = h.minutes * (prices.HourlyRate(h.role) / 60.0);
    report.human_cost += row.human_cost;
    report.rows.push_back(std::move(row));
  }
  return report;
}

UsageBundle UsageBundleFromJson(const nlohmann::json& j) {
  UsageBundle b;
  if (j.contains("usage")) b.usage = UsageLedger::EntriesFromJson(j.at("usage"));
  try {
    for (const auto& h : j.value("human", nlohmann::json::array())) {
      b.human.push_back(HumanEffort{h.at("step").get<std::string>(),
                                    ParseHumanRole(h.at("role").get<std::string>()),
                                    h.at("minutes").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed human effort record: ") + e.what());
  }
  return b;
}

ThroughputReport ComputeThroughput(const AnnotationRun& run) {
  if (run.annotations.empty()) {
    throw EvalError("throughput of an empty annotation run is undefined");
  }
  if (!(run.wall_clock_seconds > 0.0)) {
    throw EvalError("annotation run has no positive wall-clock time");
  }
  ThroughputReport r;
  r.annotations = run.annotations.size();
  r.wall_clock_seconds = run.wall_clock_seconds;
  std::int64_t tokens = 0;
  for (const auto& a : run.annotations) tokens += a.input_tokens + a.output_tokens;
  const auto n = static_cast<double>(r.annotations);
  r.annotations_per_sec = n / run.wall_clock_seconds;
  r.tokens_per_annotation = static_cast<double>(tokens) / n;
  return r;
}

// ---------------------------------------------------------------------------

EvaluationReport Evaluate(const Dataset& dataset,
                          std::span<const Slice> predicted,
                          const EvalOptions& options, Diagnostics* diag) {
  EvaluationReport report;
  report.dataset_name = dataset.name();
  report.dataset_size = dataset.size();
  report.alpha = options.alpha;
  report.overall_accuracy = OverallAccuracy(dataset);

  const bool complete = std::all_of(
      dataset.examples().begin(), dataset.examples().end(),
      [](const Example& ex) { return ex.has_task_outcome(); });
  if (!complete) {
    report.notes.push_back(
        "task metrics skipped: not every example has a label and prediction");
  }

  std::vector<Slice> all;
  for (const auto& name : dataset.gold_slice_names()) {
    all.push_back(GoldSlice(dataset, name));
  }
  for (const auto& s : predicted) {
    MemberSet(s, dataset, "predicted");
    all.push_back(s);
  }

  std::map<std::string, UnderperformanceResult> tests;
  if (complete) {
    Diagnostics local;
    const auto results = DetectUnderperforming(all, dataset, options.alpha, &local);
    for (const auto& w : local.warnings()) {
      report.notes.push_back(w);
      WarnTo(diag, w);
    }
    for (const auto& r : results) tests[r.criterion + '\0' + r.config_label] = r;
  }

  const auto n = static_cast<double>(dataset.size());
  for (const auto& s : all) {
    SliceEvaluation e;
    e.criterion = s.criterion_name;
    e.config_label = s.config_label;
    e.source = s.source;
    e.size = s.size();
    e.fraction = static_cast<double>(s.size()) / n;
    if (s.source == SliceSource::kPredicted) {
      if (dataset.gold_slice_names().count(s.criterion_name)) {
        e.prf = SlicePrf(s, GoldSlice(dataset, s.criterion_name), dataset);
      } else if (options.require_gold) {
        throw EvalError("dataset '" + dataset.name() +
                        "' has no gold column 'slice:" + s.criterion_name + "'");
      } else {
        report.notes.push_back("no gold column for '" + s.criterion_name +
                               "'; F1 not computed");
      }
    }
    const auto it = tests.find(s.criterion_name + '\0' + s.config_label);
    if (it != tests.end()) e.task = it->second;
    report.slices.push_back(std::move(e));
  }
  return report;
}

std::optional<double> AverageF1(const EvaluationReport& report,
                                const std::string& config_label) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& s : report.slices) {
    if (s.source != SliceSource::kPredicted || s.config_label != config_label ||
        !s.prf) {
      continue;
    }
    sum += s.prf->f1;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

nlohmann::ordered_json ReportToJson(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["format"] = "semslice-eval-report/v1";
  j["dataset"] = report.dataset_name;
  j["size"] = report.dataset_size;
  j["alpha"] = report.alpha;
  j["overall_accuracy"] = report.overall_accuracy
                              ? nlohmann::ordered_json(*report.overall_accuracy)
                              : nlohmann::ordered_json(nullptr);
  auto& slices = j["slices"] = nlohmann::ordered_json::array();
  std::set<std::string> configs;
  for (const auto& s : report.slices) {
    nlohmann::ordered_json e;
    e["criterion"] = s.criterion;
    e["source"] = ToString(s.source);
    e["config_label"] = s.config_label;
    e["size"] = s.size;
    e["fraction"] = s.fraction;
    if (s.prf) {
      e["prf"] = {{"precision", s.prf->precision}, {"recall", s.prf->recall},
                  {"f1", s.prf->f1},               {"tp", s.prf->tp},
                  {"fp", s.prf->fp},               {"fn", s.prf->fn}};
      configs.insert(s.config_label);
    } else {
      e["prf"] = nullptr;
    }
    if (s.task) {
      const auto& t = *s.task;
      e["task"] = {{"accuracy", t.slice_accuracy},
                   {"table", {{t.table.a, t.table.b}, {t.table.c, t.table.d}}},
                   {"p_value", t.p_value},
                   {"flagged", t.flagged},
                   {"direction", ToString(t.direction)}};
    } else {
      e["task"] = nullptr;
    }
    slices.push_back(std::move(e));
  }
  auto& avg = j["average_f1"] = nlohmann::ordered_json::object();
  for (const auto& c : configs) avg[ConfigColumn(c)] = *AverageF1(report, c);

  UsageLedger ledger;
  for (const auto& u : report.usage) ledger.Add(u);
  j["usage"] = ledger.ToJson();
  if (report.cost) {
    nlohmann::ordered_json c;
    auto& rows = c["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.cost->rows) {
      rows.push_back({{"step", r.step},
                      {"model", r.model_id},
                      {"input_tokens", r.input_tokens},
                      {"output_tokens", r.output_tokens},
                      {"token_cost_usd", r.token_cost},
                      {"human_minutes", r.human_minutes},
                      {"human_cost_usd", r.human_cost},
                      {"total_usd", r.total()}});
    }
    auto& by_step = c["by_step_usd"] = nlohmann::ordered_json::object();
    for (const auto& [step, v] : report.cost->ByStep()) by_step[step] = v;
    c["token_cost_usd"] = report.cost->token_cost;
    c["human_cost_usd"] = report.cost->human_cost;
    c["total_usd"] = report.cost->total();
    j["cost"] = std::move(c);
  } else {
    j["cost"] = nullptr;
  }
  auto& tp = j["throughput"] = nlohmann::ordered_json::array();
  for (const auto& t : report.throughput) {
    tp.push_back({{"label", t.label},
                  {"annotations", t.throughput.annotations},
                  {"wall_clock_seconds", t.throughput.wall_clock_seconds},
                  {"annotations_per_sec", t.throughput.annotations_per_sec},
                  {"tokens_per_annotation", t.throughput.tokens_per_annotation}});
  }
  j["notes"] = report.notes;
  return j;
}

std::string_view SignificanceStars(double p) {
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::string RenderMarkdownTable(const EvaluationReport& report) {
  std::vector<std::string> criteria;
  std::vector<std::string> configs;
  const auto add_unique = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  for (const auto& s : report.slices) {
    add_unique(criteria, s.criterion);
    if (s.source == SliceSource::kPredicted) add_unique(configs, s.config_label);
  }
  const auto find = [&](const std::string& criterion, SliceSource source,
                        const std::string& config) -> const SliceEvaluation* {
    for (const auto& s : report.slices) {
      if (s.criterion == criterion && s.source == source &&
          (source == SliceSource::kGold || s.config_label == config)) {
        return &s;
      }
    }
    return nullptr;
  };
  const auto accuracy = [](const SliceEvaluation* s) -> std::string {
    if (s == nullptr || !s->task) return "-";
    return fmt::format("{:.2f}{}", s->task->slice_accuracy,
                       SignificanceStars(s->task->p_value));
  };

  std::string out = "| Slice | Fraction |";
  std::string rule = "|---|---:|";
  for (const auto& c : configs) {
    out += " F1 " + ConfigColumn(c) + " |";
    rule += "---:|";
  }
  out += " Acc gold |";
  rule += "---:|";
  for (const auto& c : configs) {
    out += " Acc " + ConfigColumn(c) + " |";
    rule += "---:|";
  }
  out += "\n" + rule + "\n";

  for (const auto& name : criteria) {
    const SliceEvaluation* gold = find(name, SliceSource::kGold, "");
    out += "| " + name + " | " +
           (gold ? fmt::format("{:.1f}%", gold->fraction * 100.0)
                 : std::string("-")) +
           " |";
    for (const auto& c : configs) {
      const SliceEvaluation* p = find(name, SliceSource::kPredicted, c);
      out += " " + (p && p->prf ? fmt::format("{:.2f}", p->prf->f1)
                                : std::string("-")) +
             " |";
    }
    out += " " + accuracy(gold) + " |";
    for (const auto& c : configs) {
      out += " " + accuracy(find(name, SliceSource::kPredicted, c)) + " |";
    }
    out += "\n";
  }
  if (!configs.empty()) {
    out += "| avg | |";
    for (const auto& c : configs) {
      const auto avg = AverageF1(report, c);
      out += " " + (avg ? fmt::format("{:.2f}", *avg) : std::string("-")) + " |";
    }
    out += " |";
    for (std::size_t i = 0; i < configs.size(); ++i) out += " |";
    out += "\n";
  }
  if (report.overall_accuracy) {
    out += fmt::format("\nOverall task accuracy: {:.4f} ({} examples). ",
                       *report.overall_accuracy, report.dataset_size);
    out += "** p < 0.01, * p < 0.05 (two-sided Fisher exact test).\n";
  }
  return out;
}

}  // namespace semslice
