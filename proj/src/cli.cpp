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

#include "semslice/cli.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <memory>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "semslice/backend.hpp"
#include "semslice/corpus.hpp"
#include "semslice/eval.hpp"
#include "semslice/io.hpp"
#include "semslice/runconfig.hpp"
#include "semslice/sampler.hpp"
#include "semslice/slicer.hpp"
#include "semslice/version.hpp"

namespace semslice::cli {
namespace fs = std::filesystem;
namespace {

constexpr std::string_view kDefaultPreset = "M_zero-shot";
constexpr std::string_view kDefaultBaseUrl = "https://api.openai.com/v1";
constexpr std::string_view kDefaultKeyEnv = "OPENAI_API_KEY";

struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int parallelism = 8;
  std::string cache_dir;
  std::string backend = "http";
  std::string mock_script;
  bool interactive = false;
};

std::string UtcTimestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch())
                      .count() %
                  1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", fmt::gmtime(t), ms);
}

std::string CompactTimestamp() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y%m%dT%H%M%SZ}", fmt::gmtime(t));
}

std::string GetEnv(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  return v == nullptr ? std::string() : std::string(v);
}

// Append-only record of one command invocation.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv)
      : started_at_(UtcTimestamp()) {
    j_["format"] = "semslice-manifest/v1";
    j_["command"] = std::move(command);
    j_["argv"] = std::move(argv);
    j_["tool_version"] = std::string(GitDescribe());
    j_["config"] = nullptr;
    j_["inputs"] = nlohmann::ordered_json::array();
    j_["outputs"] = nlohmann::ordered_json::array();
  }

  void SetConfig(nlohmann::ordered_json config) { j_["config"] = std::move(config); }
  void Set(const std::string& key, nlohmann::ordered_json value) {
    j_[key] = std::move(value);
  }
  void Input(const fs::path& path) {
    j_["inputs"].push_back(
        {{"path", path.string()}, {"sha256", Sha256Hex(ReadFile(path))}});
  }
  void Output(const fs::path& dir, const fs::path& path) {
    j_["outputs"].push_back({{"path", fs::relative(path, dir).string()},
                             {"sha256", Sha256Hex(ReadFile(path))}});
  }
  void Write(const fs::path& dir) {
    j_["started_at"] = started_at_;
    j_["finished_at"] = UtcTimestamp();
    WriteFileAtomic(dir / "manifest.json", j_.dump(2) + "\n");
  }

 private:
  std::string started_at_;
  nlohmann::ordered_json j_;
};

// Creates the output directory; refuses to reuse one that already holds a
// manifest.
fs::path PrepareOutDir(const std::string& requested, const std::string& criterion,
                       const std::string& preset) {
  const fs::path dir = requested.empty()
                           ? DefaultRunDir(fs::current_path(), criterion, preset)
                           : fs::path(requested);
  if (fs::exists(dir / "manifest.json")) {
    throw ConfigError("output directory " + dir.string() +
                      " already holds a run (manifest.json exists)");
  }
  fs::create_directories(dir);
  return dir;
}

nlohmann::json LoadConfigDoc(const GlobalFlags& g) {
  if (g.config_path.empty()) return nlohmann::json::object();
  try {
    auto doc = nlohmann::json::parse(ReadFile(g.config_path));
    if (!doc.is_object()) throw ConfigError(g.config_path + ": expected an object");
    return doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(g.config_path + ": " + e.what());
  }
}

void PrintWarnings(const std::vector<ConfigIssue>& issues, std::ostream& err) {
  for (const auto& w : issues) err << "warning: " << w.field << ": " << w.message << "\n";
}

SliceConfig ResolveConfig(const GlobalFlags& g, const std::string& preset,
                          const nlohmann::json& doc, std::ostream& err) {
  const ValidateOptions opts{.interactive = g.interactive};
  SliceConfig cfg;
  if (!g.config_path.empty()) {
    if (!preset.empty()) {
      throw ConfigError("--preset and --config are mutually exclusive; put "
                        "\"preset\" in the config file instead");
    }
    ValidateOptions file_opts = opts;
    file_opts.require_seed = true;
    const auto checked = ValidateConfigJson(doc, file_opts);
    PrintWarnings(checked.warnings, err);
    if (!checked.ok()) throw ConfigError(checked.ErrorSummary());
    cfg = *checked.config;
  } else {
    cfg = NamedPreset(preset.empty() ? kDefaultPreset : preset);
  }
  if (g.seed) cfg.seed = *g.seed;
  const auto checked = ValidateConfig(cfg, opts);
  if (g.config_path.empty()) PrintWarnings(checked.warnings, err);
  if (!checked.ok()) throw ConfigError(checked.ErrorSummary());
  return *checked.config;
}

Endpoint EndpointFrom(const nlohmann::json& section, const nlohmann::json& fallback) {
  auto str = [&](const char* key, std::string_view def) {
    if (section.contains(key)) return section.at(key).get<std::string>();
    if (fallback.contains(key)) return fallback.at(key).get<std::string>();
    return std::string(def);
  };
  std::string base = str("base_url", "");
  if (base.empty()) base = GetEnv("SEMSLICE_BASE_URL");
  if (base.empty()) base = std::string(kDefaultBaseUrl);
  return Endpoint{base, GetEnv(str("api_key_env", kDefaultKeyEnv))};
}

RetryPolicy RetryFrom(const nlohmann::json& section) {
  RetryPolicy retry;
  if (section.contains("retry")) {
    const auto& r = section.at("retry");
    retry.max_attempts = r.value("max_attempts", retry.max_attempts);
    retry.initial_backoff = std::chrono::milliseconds(
        r.value("initial_backoff_ms",
                static_cast<std::int64_t>(retry.initial_backoff.count())));
  }
  return retry;
}

// Everything a pipeline command needs beyond its config.
struct Runtime {
  std::shared_ptr<CompletionBackend> backend;
  std::shared_ptr<EmbeddingProvider> embedder;
  EditHook editor;
};

Runtime MakeRuntime(const GlobalFlags& g, const nlohmann::json& doc,
                    const std::set<std::string>& models) {
  Runtime rt;
  try {
    if (g.backend == "mock") {
      if (g.mock_script.empty()) {
        throw ConfigError("--backend mock needs --mock-script");
      }
      rt.backend = MockBackendFromJson(nlohmann::json::parse(ReadFile(g.mock_script)));
    } else {
      const nlohmann::json section = doc.value("backend", nlohmann::json::object());
      const nlohmann::json per_model =
          section.value("models", nlohmann::json::object());
      HttpBackend::Options opts;
      for (const auto& m : models) {
        opts.models[m] = EndpointFrom(
            per_model.value(m, nlohmann::json::object()), section);
      }
      opts.retry = RetryFrom(section);
      opts.max_in_flight_per_endpoint =
          section.value("max_in_flight", std::max(1, g.parallelism));
      opts.timeout = std::chrono::seconds(section.value("timeout_s", 120));
      rt.backend = std::make_shared<HttpBackend>(std::move(opts));
    }
    if (!g.cache_dir.empty()) {
      rt.backend = std::make_shared<CachingBackend>(
          rt.backend, std::make_shared<DiskCache>(g.cache_dir));
    }

    const nlohmann::json emb = doc.value("embedding", nlohmann::json::object());
    const std::string provider = emb.value("provider", std::string("hash-ngram"));
    std::shared_ptr<EmbeddingProvider> inner;
    if (provider == "hash-ngram") {
      inner = std::make_shared<HashNgramEmbedder>(
          emb.value("dim", HashNgramEmbedder::kDefaultDim), emb.value("n", 3));
    } else if (provider == "http") {
      inner = std::make_shared<HttpEmbeddingProvider>(
          EndpointFrom(emb, nlohmann::json::object()),
          emb.at("model").get<std::string>(), RetryFrom(emb));
    } else {
      throw ConfigError("embedding.provider must be \"hash-ngram\" or \"http\"");
    }
    rt.embedder = std::make_shared<MemoizingEmbedder>(std::move(inner));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed backend settings: ") + e.what());
  }
  if (g.interactive) rt.editor = EditWithEditor;
  return rt;
}

Dataset LoadData(const std::string& path, const std::string& format) {
  return format.empty() ? LoadDataset(path)
                        : LoadDataset(path, ParseDataFormat(format));
}

SlicingPrompt ConstructPrompt(const SlicingCriterion& criterion,
                              const Dataset& dataset, const SliceConfig& cfg,
                              const Runtime& rt, Diagnostics* diag) {
  auto ledger = std::make_shared<UsageLedger>();
  PromptBackends b{
      MakeRole(Role::kGenerator, cfg.generator_model, rt.backend, ledger),
      MakeRole(Role::kTeacher, cfg.teacher_model, rt.backend, ledger),
      MakeRole(Role::kStudent, cfg.student_model, rt.backend, ledger),
      rt.embedder.get(), rt.editor};
  SlicingPrompt prompt = BuildPrompt(criterion, dataset, cfg, b, diag);
  prompt.usage = ledger->Entries();
  return prompt;
}

AnnotationRun RunAnnotation(const SlicingPrompt& prompt, const Dataset& dataset,
                            const Runtime& rt, int parallelism,
                            Diagnostics* diag) {
  const BackendRole student = MakeRole(Role::kStudent, prompt.student_model,
                                       rt.backend, std::make_shared<UsageLedger>());
  return Annotate(dataset, prompt, student, {.parallelism = parallelism}, diag);
}

struct SliceOutputs {
  fs::path run;
  fs::path annotations;
  fs::path slice;
};

SliceOutputs WriteSliceOutputs(const fs::path& dir, const Dataset& dataset,
                               AnnotationRun& run) {
  SliceOutputs o{dir / "run.json", dir / "annotations.jsonl", dir / "slice.json"};
  WriteAnnotationRun(run, o.run, o.annotations);
  const Slice slice = ExtractSlice(dataset, run, run.criterion);
  WriteFileAtomic(o.slice, SliceToJson(slice).dump(2) + "\n");
  return o;
}

std::string SliceSummary(const AnnotationRun& run) {
  const double secs = run.wall_clock_seconds;
  const double rate =
      secs > 0.0 ? static_cast<double>(run.annotations.size()) / secs : 0.0;
  return fmt::format(
      "annotated {} examples in {:.2f}s ({:.1f} annotations/sec); {} in slice "
      "'{}'",
      run.annotations.size(), secs, rate, run.count_in(), run.criterion);
}

std::set<std::string> ModelsOf(const SliceConfig& cfg) {
  return {cfg.student_model, cfg.teacher_model, cfg.generator_model};
}

// ---------------------------------------------------------------------------
// Commands.

struct PromptArgs {
  std::string criterion;
  std::string description;
  std::string data;
  std::string format;
  std::string preset;
  std::string out;
};

int CmdPrompt(const GlobalFlags& g, const PromptArgs& a,
              const std::vector<std::string>& argv, std::ostream& out,
              std::ostream& err) {
  const auto doc = LoadConfigDoc(g);
  const SliceConfig cfg = ResolveConfig(g, a.preset, doc, err);
  const Dataset dataset = LoadData(a.data, a.format);
  const Runtime rt = MakeRuntime(g, doc, ModelsOf(cfg));
  SlicingCriterion criterion{a.criterion, std::nullopt};
  if (!a.description.empty()) criterion.description = a.description;

  Diagnostics diag([&](const std::string& w) { err << "warning: " << w << "\n"; });
  Manifest manifest("prompt", argv);
  manifest.Input(a.data);
  if (!g.config_path.empty()) manifest.Input(g.config_path);
  const SlicingPrompt prompt = ConstructPrompt(criterion, dataset, cfg, rt, &diag);

  const fs::path dir = PrepareOutDir(a.out, a.criterion, cfg.preset);
  const fs::path artifact = dir / "prompt.json";
  WriteFileAtomic(artifact, PromptToJson(prompt).dump(2) + "\n");
  manifest.SetConfig(ConfigToJson(cfg));
  manifest.Output(dir, artifact);
  manifest.Write(dir);
  out << "instruction: " << prompt.instruction.question << "\n";
  out << "wrote " << artifact.string() << "\n";
  return kExitOk;
}

struct SliceArgs {
  std::string prompt;
  std::string data;
  std::string format;
  std::string out;
};

int CmdSlice(const GlobalFlags& g, const SliceArgs& a,
             const std::vector<std::string>& argv, std::ostream& out,
             std::ostream& err) {
  const auto doc = LoadConfigDoc(g);
  SlicingPrompt prompt;
  try {
    prompt = PromptFromJson(nlohmann::json::parse(ReadFile(a.prompt)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(a.prompt + ": " + e.what());
  }
  const Dataset dataset = LoadData(a.data, a.format);
  const Runtime rt = MakeRuntime(g, doc, {prompt.student_model});

  Diagnostics diag([&](const std::string& w) { err << "warning: " << w << "\n"; });
  Manifest manifest("slice", argv);
  manifest.Input(a.prompt);
  manifest.Input(a.data);
  AnnotationRun run = RunAnnotation(prompt, dataset, rt, g.parallelism, &diag);
  run.prompt_ref = a.prompt;

  const fs::path dir = PrepareOutDir(a.out, prompt.criterion.name, prompt.config.preset);
  const SliceOutputs o = WriteSliceOutputs(dir, dataset, run);
  manifest.SetConfig(ConfigToJson(prompt.config));
  manifest.Set("parallelism", g.parallelism);
  for (const auto& p : {o.run, o.annotations, o.slice}) manifest.Output(dir, p);
  manifest.Write(dir);
  out << SliceSummary(run) << "\n";
  out << "wrote " << o.slice.string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string data;
  std::string format;
  std::vector<std::string> slices;
  std::vector<std::string> runs;
  std::vector<std::string> prompts;
  std::vector<std::string> usage;
  std::string pricing;
  double alpha = 0.05;
  bool gate = false;
  bool require_gold = false;
  std::string out;
};

nlohmann::json ParseJsonFile(const std::string& path) {
  try {
    return nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw DatasetError(path + ": " + e.what());
  }
}

int CmdEval(const GlobalFlags&, const EvalArgs& a,
            const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err) {
  const Dataset dataset = LoadData(a.data, a.format);
  Manifest manifest("eval", argv);
  manifest.Input(a.data);

  std::vector<Slice> predicted;
  UsageLedger ledger;
  std::vector<HumanEffort> human;
  std::vector<ThroughputEntry> throughput;
  for (const auto& path : a.slices) {
    manifest.Input(path);
    predicted.push_back(SliceFromJson(ParseJsonFile(path)));
  }
  for (const auto& path : a.runs) {
    manifest.Input(path);
    const AnnotationRun run = ReadAnnotationRun(path);
    predicted.push_back(ExtractSlice(dataset, run, run.criterion));
    for (const auto& u : run.usage()) ledger.Add(u);
    if (run.wall_clock_seconds > 0.0) {
      throughput.push_back({run.criterion + "/" + run.config_label,
                            ComputeThroughput(run)});
    }
  }
  for (const auto& path : a.prompts) {
    manifest.Input(path);
    for (const auto& u : PromptFromJson(ParseJsonFile(path)).usage) ledger.Add(u);
  }
  for (const auto& path : a.usage) {
    manifest.Input(path);
    const UsageBundle bundle = UsageBundleFromJson(ParseJsonFile(path));
    for (const auto& u : bundle.usage) ledger.Add(u);
    human.insert(human.end(), bundle.human.begin(), bundle.human.end());
  }

  Diagnostics diag([&](const std::string& w) { err << "note: " << w << "\n"; });
  EvaluationReport report = Evaluate(
      dataset, predicted, {.alpha = a.alpha, .require_gold = a.require_gold}, &diag);
  report.usage = ledger.Entries();
  report.throughput = std::move(throughput);
  if (!a.pricing.empty()) {
    manifest.Input(a.pricing);
    report.cost = ComputeCostReport(report.usage, LoadCostModel(a.pricing), human);
  } else if (!human.empty() || !report.usage.empty()) {
    report.notes.push_back("no --pricing file given; cost not computed");
  }

  const fs::path dir = PrepareOutDir(a.out, "eval", dataset.name());
  const std::string table = RenderMarkdownTable(report);
  WriteFileAtomic(dir / "report.json", ReportToJson(report).dump(2) + "\n");
  WriteFileAtomic(dir / "report.md", table);
  manifest.Set("alpha", a.alpha);
  manifest.Output(dir, dir / "report.json");
  manifest.Output(dir, dir / "report.md");
  manifest.Write(dir);

  out << table;
  if (report.cost) out << fmt::format("Estimated cost: ${:.2f}\n", report.cost->total());
  out << "wrote " << (dir / "report.json").string() << "\n";

  std::size_t flagged = 0;
  for (const auto& s : report.slices) {
    if (s.task && s.task->flagged) ++flagged;
  }
  if (flagged > 0) {
    err << flagged << " slice(s) under-perform at alpha " << a.alpha << "\n";
    if (a.gate) return kExitGated;
  }
  return kExitOk;
}

struct BatchArgs {
  std::string criteria;
  std::string data;
  std::string format;
  std::string preset;
  std::string out;
};

int CmdBatch(const GlobalFlags& g, const BatchArgs& a,
             const std::vector<std::string>& argv, std::ostream& out,
             std::ostream& err) {
  const auto doc = LoadConfigDoc(g);
  const SliceConfig cfg = ResolveConfig(g, a.preset, doc, err);
  const auto criteria = ParseCriteriaFile(ReadFile(a.criteria));
  if (criteria.empty()) throw ConfigError(a.criteria + " lists no criteria");
  const Dataset dataset = LoadData(a.data, a.format);
  // One runtime, hence one memoized embedder, for every criterion.
  const Runtime rt = MakeRuntime(g, doc, ModelsOf(cfg));

  Manifest manifest("batch", argv);
  manifest.Input(a.criteria);
  manifest.Input(a.data);
  const fs::path root = PrepareOutDir(a.out, "batch", cfg.preset);
  int failures = 0;
  for (const auto& criterion : criteria) {
    Diagnostics diag([&](const std::string& w) {
      err << "warning: [" << criterion.name << "] " << w << "\n";
    });
    try {
      Manifest sub("batch/" + criterion.name, argv);
      sub.Input(a.data);
      const SlicingPrompt prompt = ConstructPrompt(criterion, dataset, cfg, rt, &diag);
      AnnotationRun run = RunAnnotation(prompt, dataset, rt, g.parallelism, &diag);
      const fs::path dir = root / Slugify(criterion.name);
      if (fs::exists(dir / "manifest.json")) {
        throw ConfigError("duplicate criterion '" + criterion.name + "'");
      }
      fs::create_directories(dir);
      const fs::path artifact = dir / "prompt.json";
      WriteFileAtomic(artifact, PromptToJson(prompt).dump(2) + "\n");
      run.prompt_ref = artifact.string();
      const SliceOutputs o = WriteSliceOutputs(dir, dataset, run);
      sub.SetConfig(ConfigToJson(cfg));
      for (const auto& p : {artifact, o.run, o.annotations, o.slice}) {
        sub.Output(dir, p);
        manifest.Output(root, p);
      }
      sub.Write(dir);
      out << "[" << criterion.name << "] " << SliceSummary(run) << "\n";
    } catch (const Error& e) {
      ++failures;
      err << "error: [" << criterion.name << "] " << e.what() << "\n";
    }
  }
  manifest.SetConfig(ConfigToJson(cfg));
  manifest.Set("failed_criteria", failures);
  manifest.Write(root);
  out << "wrote " << root.string() << "\n";
  return failures == 0 ? kExitOk : kExitPipeline;
}

int CmdPresets(bool as_json, std::ostream& out) {
  if (as_json) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& name : PresetNames()) j.push_back(ConfigToJson(NamedPreset(name)));
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  for (const auto& name : PresetNames()) {
    out << fmt::format("{:<14} {}\n", name, DescribeConfig(NamedPreset(name)));
  }
  return kExitOk;
}

}  // namespace

std::string EditWithEditor(const std::string& text) {
  const std::string editor = GetEnv("EDITOR");
  if (editor.empty()) {
    throw ConfigError("interactive mode needs the EDITOR environment variable");
  }
  std::random_device rd;
  const fs::path path = fs::temp_directory_path() /
                        fmt::format("semslice-edit-{:016x}.txt",
                                    (std::uint64_t{rd()} << 32) | rd());
  WriteFileAtomic(path, text + "\n");
  const std::string command = editor + " '" + path.string() + "'";
  const int status = std::system(command.c_str());
  std::string edited = ReadFile(path);
  std::error_code ec;
  fs::remove(path, ec);
  if (status != 0) {
    throw Error("editor exited with status " + std::to_string(status));
  }
  while (!edited.empty() && (edited.back() == '\n' || edited.back() == '\r')) {
    edited.pop_back();
  }
  return edited;
}

fs::path DefaultRunDir(const fs::path& parent, const std::string& criterion,
                       const std::string& preset) {
  std::string slug = Slugify(criterion);
  if (slug.empty()) slug = "slice";
  const std::string base =
      slug + "-" + Slugify(preset) + "-" + CompactTimestamp();
  fs::path dir = parent / base;
  for (int i = 2; fs::exists(dir); ++i) {
    dir = parent / (base + "-" + std::to_string(i));
  }
  return dir;
}

std::vector<SlicingCriterion> ParseCriteriaFile(const std::string& content) {
  std::vector<SlicingCriterion> out;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string::npos) end = content.size();
    const std::string line = Trim(std::string_view(content).substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    SlicingCriterion c;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      c.name = line;
    } else {
      c.name = Trim(std::string_view(line).substr(0, colon));
      const std::string desc = Trim(std::string_view(line).substr(colon + 1));
      if (!desc.empty()) c.description = desc;
    }
    if (c.name.empty()) throw ConfigError("criteria line with an empty name: " + line);
    out.push_back(std::move(c));
  }
  return out;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Slice datasets by natural-language criteria using language models.", "semslice"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(GitDescribe()));

  GlobalFlags g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "JSON config file (method + backend)")
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Sampling seed (default 0)");
  app.add_option("--parallelism", g.parallelism, "Concurrent model calls")
      ->check(CLI::Range(1, 4096));
  app.add_option("--cache-dir", g.cache_dir, "On-disk completion cache");
  app.add_option("--backend", g.backend, "Model backend")
      ->check(CLI::IsMember({"http", "mock"}));
  app.add_option("--mock-script", g.mock_script, "Mock backend script (JSON)")
      ->check(CLI::ExistingFile);
  app.add_flag("--interactive", g.interactive,
               "Allow human edit steps through $EDITOR");

  PromptArgs pa;
  auto* prompt = app.add_subcommand("prompt", "Build a slicing prompt artifact");
  prompt->add_option("--criterion", pa.criterion, "Slicing criterion")->required();
  prompt->add_option("--description", pa.description, "Free-text description");
  prompt->add_option("--data", pa.data, "Dataset (JSONL or CSV)")
      ->required()
      ->check(CLI::ExistingFile);
  prompt->add_option("--format", pa.format, "Dataset format")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  prompt->add_option("--preset", pa.preset, "Named configuration");
  prompt->add_option("--out", pa.out, "Output directory");

  SliceArgs sa;
  auto* slice = app.add_subcommand("slice", "Annotate a dataset with a prompt");
  slice->add_option("--prompt", sa.prompt, "Prompt artifact (prompt.json)")
      ->required()
      ->check(CLI::ExistingFile);
  slice->add_option("--data", sa.data, "Dataset (JSONL or CSV)")
      ->required()
      ->check(CLI::ExistingFile);
  slice->add_option("--format", sa.format, "Dataset format")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  slice->add_option("--out", sa.out, "Output directory");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score slices and report cost");
  eval->add_option("--data", ea.data, "Dataset with gold slices / outcomes")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--format", ea.format, "Dataset format")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  eval->add_option("--slice", ea.slices, "Slice file (repeatable)")
      ->check(CLI::ExistingFile);
  eval->add_option("--run", ea.runs, "Annotation run header (repeatable)")
      ->check(CLI::ExistingFile);
  eval->add_option("--prompt", ea.prompts, "Prompt artifact, for its usage")
      ->check(CLI::ExistingFile);
  eval->add_option("--usage", ea.usage, "Usage/human-effort file (repeatable)")
      ->check(CLI::ExistingFile);
  eval->add_option("--pricing", ea.pricing, "Pricing file")->check(CLI::ExistingFile);
  eval->add_option("--alpha", ea.alpha, "Significance level")
      ->check(CLI::Range(1e-12, 0.999999));
  eval->add_flag("--gate", ea.gate, "Exit 1 when a slice under-performs");
  eval->add_flag("--require-gold", ea.require_gold,
                 "Fail when a slice has no gold column");
  eval->add_option("--out", ea.out, "Output directory");

  BatchArgs ba;
  auto* batch = app.add_subcommand("batch", "Prompt and slice many criteria");
  batch->add_option("--criteria", ba.criteria, "One criterion per line")
      ->required()
      ->check(CLI::ExistingFile);
  batch->add_option("--data", ba.data, "Dataset (JSONL or CSV)")
      ->required()
      ->check(CLI::ExistingFile);
  batch->add_option("--format", ba.format, "Dataset format")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  batch->add_option("--preset", ba.preset, "Named configuration");
  batch->add_option("--out", ba.out, "Output directory");

  bool presets_json = false;
  auto* presets = app.add_subcommand("presets", "List the named configurations");
  presets->add_flag("--json", presets_json, "Print full configurations");

  std::vector<const char*> argv{"semslice"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  std::vector<std::string> full{"semslice"};
  full.insert(full.end(), args.begin(), args.end());
  try {
    if (prompt->parsed()) return CmdPrompt(g, pa, full, out, err);
    if (slice->parsed()) return CmdSlice(g, sa, full, out, err);
    if (eval->parsed()) return CmdEval(g, ea, full, out, err);
    if (batch->parsed()) return CmdBatch(g, ba, full, out, err);
    if (presets->parsed()) return CmdPresets(presets_json, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPipeline;
  }
  return kExitUsage;
}

}  // namespace semslice::cli
