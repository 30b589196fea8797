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

#include "semslice/promptgen.hpp"

#include <fmt/args.h>
#include <fmt/format.h>

#include <algorithm>
#include <utility>

#include "semslice/error.hpp"
#include "semslice/io.hpp"
#include "semslice/slicer.hpp"

namespace semslice {
namespace {

constexpr std::string_view kExamplesSlot = "{examples}\n\n";
constexpr std::string_view kOmittedExamples = "[examples omitted]";
constexpr std::string_view kSuggestionMarker = "Suggestion:";
constexpr std::string_view kRevisedMarker = "Revised instruction:";

std::string ExamplesBlock(std::span<const FewShotExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    if (!out.empty()) out += "\n\n";
    out += "Text: ";
    out += ex.text;
    out += "\nAnswer: ";
    out += ToString(ex.label);
  }
  return out;
}

// Drops the examples slot (and the blank line after it) when there is
// nothing to show.
std::string WithoutEmptyExamples(std::string_view tmpl, bool has_examples) {
  std::string out(tmpl);
  if (!has_examples) {
    const auto pos = out.find(kExamplesSlot);
    if (pos != std::string::npos) out.erase(pos, kExamplesSlot.size());
  }
  return out;
}

Instruction Revise(Instruction instruction, std::string question,
                   std::string author, std::string step) {
  instruction.question = question;
  instruction.history.push_back(
      {std::move(question), std::move(author), std::move(step)});
  return instruction;
}

void RequireRole(const BackendRole* role, std::initializer_list<Role> allowed,
                 std::string_view step) {
  if (role == nullptr || !role->backend) {
    throw ConfigError(std::string(step) + " needs a configured backend role");
  }
  if (std::find(allowed.begin(), allowed.end(), role->role) == allowed.end()) {
    throw ConfigError(std::string(step) + " cannot run with the " +
                      std::string(ToString(role->role)) + " role");
  }
}

// A generated question is unusable when it is empty, or both lacks a
// question mark and is shorter than five characters.
bool UsableQuestion(std::string_view q) {
  return !q.empty() && (q.find('?') != std::string_view::npos || q.size() >= 5);
}

std::string FirstNonEmptyLine(std::string_view text) {
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = TrimView(text.substr(start, end - start));
    if (!line.empty()) return std::string(line);
    start = end + 1;
  }
  return {};
}

ExampleLabeler LabelerFor(Role role) {
  return role == Role::kTeacher ? ExampleLabeler::kTeacher
                                : ExampleLabeler::kStudent;
}

Label Opposite(Label label) {
  return label == Label::kYes ? Label::kNo : Label::kYes;
}

}  // namespace

std::string_view ToString(Label label) {
  return label == Label::kYes ? "yes" : "no";
}

std::string_view ToString(ExampleOrigin origin) {
  return origin == ExampleOrigin::kProvided ? "provided" : "synthesized";
}

std::string_view ToString(ExampleLabeler labeler) {
  switch (labeler) {
    case ExampleLabeler::kStudent:
      return "student";
    case ExampleLabeler::kTeacher:
      return "teacher";
    case ExampleLabeler::kNone:
      return "none";
  }
  return "none";
}

std::string TemplateInstruction(std::string_view concept_name) {
  return "Is the text related to " + std::string(concept_name) + "?";
}

const std::vector<std::pair<std::string, std::string>>&
GenerationDemonstrations() {
  static const std::vector<std::pair<std::string, std::string>> demos = {
      {"find product reviews that complain about how long the delivery took",
       "Does the text complain about slow delivery or shipping delays?"},
      {"comments that talk about a religion or religious people",
       "Does the text mention a religion or members of a religious group?"},
  };
  return demos;
}

std::string RenderGenerationPrompt(std::string_view goal) {
  std::string demos;
  for (const auto& [demo_goal, question] : GenerationDemonstrations()) {
    if (!demos.empty()) demos += "\n\n";
    demos += "User goal: " + demo_goal + "\nSuggestion: " + question;
  }
  std::string tmpl(templates::InstructionGeneration());
  const auto pos = tmpl.find(kOmittedExamples);
  if (pos != std::string::npos) {
    // Escape braces so demonstration text is never read as a field.
    std::string escaped;
    for (char c : demos) {
      escaped.push_back(c);
      if (c == '{' || c == '}') escaped.push_back(c);
    }
    tmpl.replace(pos, kOmittedExamples.size(), escaped);
  }
  return fmt::format(fmt::runtime(tmpl), fmt::arg("instruction", goal));
}

std::string RenderRefinementPrompt(std::string_view question) {
  return fmt::format(fmt::runtime(templates::InstructionRefinement()),
                     fmt::arg("instruction", question));
}

std::string RenderLabelingPrompt(std::string_view question,
                                 std::span<const FewShotExample> examples,
                                 std::string_view text) {
  const std::string tmpl =
      WithoutEmptyExamples(templates::SliceLabeling(), !examples.empty());
  return fmt::format(fmt::runtime(tmpl), fmt::arg("question", question),
                     fmt::arg("examples", ExamplesBlock(examples)),
                     fmt::arg("text", text));
}

std::string RenderSynthesisPrompt(std::string_view question,
                                  std::span<const FewShotExample> examples,
                                  std::size_t n, Label label) {
  const std::string tmpl =
      WithoutEmptyExamples(templates::ExampleSynthesis(), !examples.empty());
  return fmt::format(fmt::runtime(tmpl), fmt::arg("question", question),
                     fmt::arg("examples", ExamplesBlock(examples)),
                     fmt::arg("n", n), fmt::arg("label", ToString(label)));
}

std::string RenderPrompt(const SlicingPrompt& prompt, std::string_view text) {
  return RenderLabelingPrompt(prompt.instruction.question, prompt.examples,
                              text);
}

std::optional<std::string> LastMarkedLine(std::string_view text,
                                          std::string_view marker) {
  std::optional<std::string> found;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = TrimView(text.substr(start, end - start));
    if (line.starts_with(marker)) {
      found = Trim(line.substr(marker.size()));
    }
    start = end + 1;
  }
  return found;
}

Instruction GenerateInstruction(const SlicingCriterion& criterion,
                                InstructionSource source,
                                const BackendRole* generator,
                                const EditHook& editor, Diagnostics* diag) {
  if (TrimView(criterion.name).empty()) {
    throw ConfigError("slicing criterion name must not be empty");
  }
  const std::string templated = TemplateInstruction(criterion.name);
  Instruction base;
  base.source = source;

  switch (source) {
    case InstructionSource::kTemplate:
      return Revise(std::move(base), templated, "template", "generation");

    case InstructionSource::kModel: {
      RequireRole(generator, {Role::kGenerator, Role::kTeacher},
                  "instruction generation");
      const auto resp =
          generator->Complete(RenderGenerationPrompt(criterion.goal_text()),
                              PipelineStep::kInstructionGeneration);
      std::string question =
          LastMarkedLine(resp.text, kSuggestionMarker)
              .value_or(FirstNonEmptyLine(resp.text));
      if (!UsableQuestion(question)) {
        WarnTo(diag, "instruction generator returned an unusable suggestion (" +
                         resp.text + "); using the template instruction");
        return Revise(std::move(base), templated, "template", "generation");
      }
      return Revise(std::move(base), std::move(question), "model",
                    "generation");
    }

    case InstructionSource::kHumanTemplate: {
      const bool has_description =
          criterion.description && !TrimView(*criterion.description).empty();
      if (!has_description && !editor) {
        throw ConfigError(
            "human+template instructions need a description or an editor");
      }
      Instruction out = Revise(std::move(base), templated, "template",
                               "generation");
      std::string merged = templated;
      if (has_description) merged += " " + Trim(*criterion.description);
      if (editor) merged = Trim(editor(merged));
      if (merged.empty()) {
        throw ConfigError("operator edit produced an empty instruction");
      }
      return Revise(std::move(out), std::move(merged), "human", "generation");
    }
  }
  throw ConfigError("unknown instruction source");
}

Instruction RefineInstruction(const Instruction& instruction, Refinement mode,
                              const BackendRole* generator,
                              const EditHook& editor, Diagnostics* diag) {
  if (TrimView(instruction.question).empty()) {
    throw ConfigError("cannot refine an empty instruction");
  }
  Instruction out = instruction;
  out.refinement = mode;
  if (mode == Refinement::kNone) return out;
  if (mode == Refinement::kHumanModel && !editor) {
    throw ConfigError("human+model refinement needs an editor");
  }

  RequireRole(generator, {Role::kGenerator, Role::kTeacher},
              "instruction refinement");
  const auto resp =
      generator->Complete(RenderRefinementPrompt(instruction.question),
                          PipelineStep::kInstructionRefinement);
  const auto revised = LastMarkedLine(resp.text, kRevisedMarker);
  if (revised && !revised->empty()) {
    out = Revise(std::move(out), *revised, "model", "refinement");
  } else {
    WarnTo(diag,
           "refinement reply has no 'Revised instruction:' line; keeping the "
           "current instruction");
  }

  if (mode == Refinement::kHumanModel) {
    std::string edited = Trim(editor(out.question));
    if (edited.empty()) {
      throw ConfigError("operator edit produced an empty instruction");
    }
    out = Revise(std::move(out), std::move(edited), "human", "refinement");
  }
  return out;
}

LabelingOutcome LabelExamples(const Instruction& instruction,
                              std::span<const Example> inputs,
                              const BackendRole& labeler, Diagnostics* diag) {
  if (inputs.empty()) throw ConfigError("no examples to label");
  RequireRole(&labeler, {Role::kStudent, Role::kTeacher}, "example labeling");

  LabelingOutcome outcome;
  for (const Example& input : inputs) {
    FewShotExample ex;
    ex.text = input.text;
    ex.origin = ExampleOrigin::kProvided;
    ex.labeler = LabelerFor(labeler.role);
    ex.source_id = input.id;
    try {
      const auto resp =
          labeler.Complete(RenderLabelingPrompt(instruction.question, {}, input.text),
                           PipelineStep::kExampleLabeling);
      const LabelParse parsed = ParseLabel(resp.text);
      if (parsed.status == ParseStatus::kUnparseable) {
        ++outcome.unparseable;
        WarnTo(diag, "unparseable label '" + resp.text + "' for example '" +
                         input.id + "'; using no");
      }
      ex.label = parsed.verdict == Verdict::kIn ? Label::kYes : Label::kNo;
    } catch (const BackendError& e) {
      ++outcome.failed;
      WarnTo(diag, "labeling failed for example '" + input.id + "': " + e.what());
      ex.label = Label::kNo;
    }
    outcome.examples.push_back(std::move(ex));
  }
  if (outcome.failed * 2 > inputs.size()) {
    throw BackendError("example labeling failed for " +
                       std::to_string(outcome.failed) + " of " +
                       std::to_string(inputs.size()) + " inputs");
  }
  return outcome;
}

std::vector<FewShotExample> ParseSynthesizedPairs(std::string_view reply) {
  std::vector<FewShotExample> out;
  std::optional<std::string> text;
  std::size_t start = 0;
  while (start <= reply.size()) {
    auto end = reply.find('\n', start);
    if (end == std::string_view::npos) end = reply.size();
    const std::string_view raw_line = reply.substr(start, end - start);
    const std::string_view line = TrimView(raw_line);
    start = end + 1;
    if (line.starts_with("Text:")) {
      text = Trim(line.substr(5));
    } else if (line.starts_with("Answer:")) {
      if (text && !TrimView(*text).empty()) {
        const LabelParse parsed = ParseLabel(line.substr(7));
        if (parsed.status != ParseStatus::kUnparseable) {
          FewShotExample ex;
          ex.text = Trim(*text);
          ex.label = parsed.verdict == Verdict::kIn ? Label::kYes : Label::kNo;
          ex.origin = ExampleOrigin::kSynthesized;
          ex.labeler = ExampleLabeler::kNone;
          out.push_back(std::move(ex));
        }
      }
      text.reset();
    } else if (text && !line.empty()) {
      *text += "\n";
      *text += line;
    }
  }
  return out;
}

std::vector<FewShotExample> SynthesizeExamples(
    const Instruction& instruction, std::span<const FewShotExample> existing,
    Label target, std::size_t n, const BackendRole& generator,
    Diagnostics* diag) {
  if (n == 0) throw ConfigError("synthesis count must be positive");
  RequireRole(&generator, {Role::kGenerator, Role::kTeacher},
              "example synthesis");
  const std::string prompt =
      RenderSynthesisPrompt(instruction.question, existing, n, target);

  for (int attempt = 1; attempt <= 2; ++attempt) {
    const auto resp =
        generator.Complete(prompt, PipelineStep::kExampleSynthesis);
    std::vector<FewShotExample> kept;
    std::size_t dropped = 0;
    for (auto& ex : ParseSynthesizedPairs(resp.text)) {
      if (ex.label != target) {
        ++dropped;
        continue;
      }
      if (kept.size() < n) kept.push_back(std::move(ex));
    }
    if (dropped > 0) {
      WarnTo(diag, "dropped " + std::to_string(dropped) +
                       " synthesized example(s) with the wrong answer");
    }
    if (!kept.empty()) {
      if (kept.size() < n) {
        WarnTo(diag, "synthesis produced " + std::to_string(kept.size()) +
                         " of " + std::to_string(n) + " requested examples");
      }
      return kept;
    }
    WarnTo(diag, "synthesis attempt " + std::to_string(attempt) +
                     " produced no usable examples");
  }
  throw SynthesisError("example synthesis produced no usable '" +
                       std::string(ToString(target)) + "' examples");
}

std::vector<FewShotExample> AlternateLabels(std::vector<FewShotExample> examples) {
  std::vector<FewShotExample> yes, no;
  for (auto& ex : examples) {
    (ex.label == Label::kYes ? yes : no).push_back(std::move(ex));
  }
  std::vector<FewShotExample> out;
  out.reserve(yes.size() + no.size());
  for (std::size_t i = 0; i < std::max(yes.size(), no.size()); ++i) {
    if (i < yes.size()) out.push_back(std::move(yes[i]));
    if (i < no.size()) out.push_back(std::move(no[i]));
  }
  return out;
}

SlicingPrompt BuildPrompt(const SlicingCriterion& criterion,
                          const Dataset& dataset, const SliceConfig& config,
                          const PromptBackends& backends, Diagnostics* diag) {
  const bool interactive = static_cast<bool>(backends.editor);
  const ValidationResult checked =
      ValidateConfig(config, {.interactive = interactive});
  if (!checked.ok()) throw ConfigError(checked.ErrorSummary());
  const SliceConfig& cfg = *checked.config;

  SlicingPrompt prompt;
  prompt.criterion = criterion;
  prompt.config = cfg;
  prompt.student_model = cfg.student_model;

  Instruction instruction =
      GenerateInstruction(criterion, cfg.instruction_source,
                          &backends.generator, backends.editor, diag);
  instruction = RefineInstruction(instruction, cfg.instruction_refinement,
                                  &backends.generator, backends.editor, diag);
  prompt.instruction = instruction;
  if (!cfg.few_shot) return prompt;

  const auto size = static_cast<std::size_t>(cfg.few_shot_size);
  std::vector<Example> inputs;
  if (*cfg.sampler == SamplerKind::kDiversity) {
    if (backends.embedder == nullptr) {
      throw ConfigError("diversity sampling needs an embedding provider");
    }
    inputs = SampleDiverse(dataset, size, cfg.seed, *backends.embedder);
  } else {
    inputs = SampleRandom(dataset, size, cfg.seed);
  }

  const BackendRole& labeler = *cfg.labeler == LabelerKind::kTeacher
                                   ? backends.teacher
                                   : backends.student;
  std::vector<FewShotExample> labeled =
      LabelExamples(instruction, inputs, labeler, diag).examples;

  if (cfg.synthesis()) {
    std::vector<FewShotExample> yes, no;
    for (const auto& ex : labeled) {
      (ex.label == Label::kYes ? yes : no).push_back(ex);
    }
    const bool yes_is_minority = yes.size() < no.size();
    auto& minority = yes_is_minority ? yes : no;
    auto& majority = yes_is_minority ? no : yes;
    const std::size_t trigger = (size + 3) / 4;
    if (minority.size() < trigger) {
      const Label target = yes_is_minority ? Label::kYes : Label::kNo;
      const std::size_t minority_goal = size / 2;
      const std::size_t majority_goal = size - minority_goal;
      std::size_t needed = minority_goal - minority.size();

      // Synthesis is conditioned on every sampled example.
      for (int round = 0; round < 2 && needed > 0; ++round) {
        auto fresh =
            SynthesizeExamples(instruction, labeled, target, needed,
                               backends.generator, diag);
        needed -= std::min(needed, fresh.size());
        for (auto& ex : fresh) minority.push_back(std::move(ex));
      }
      if (minority.size() < minority_goal) {
        throw SynthesisError(
            "could only synthesize " +
            std::to_string(minority.size()) + " of " +
            std::to_string(minority_goal) + " '" +
            std::string(ToString(target)) + "' examples");
      }
      minority.resize(minority_goal);
      // Majority examples arrive in dataset order; the highest indices go.
      majority.resize(std::min(majority.size(), majority_goal));
      WarnTo(diag, "balanced few-shot examples to " +
                       std::to_string(minority_goal) + " '" +
                       std::string(ToString(target)) + "' / " +
                       std::to_string(majority.size()) + " '" +
                       std::string(ToString(Opposite(target))) + "'");
      labeled.clear();
      for (auto* group : {&yes, &no}) {
        for (auto& ex : *group) labeled.push_back(std::move(ex));
      }
    }
  }
  prompt.examples = AlternateLabels(std::move(labeled));
  return prompt;
}

nlohmann::ordered_json PromptToJson(const SlicingPrompt& prompt) {
  nlohmann::ordered_json j;
  j["format"] = "semslice-prompt/v1";
  j["criterion"]["name"] = prompt.criterion.name;
  j["criterion"]["description"] =
      prompt.criterion.description
          ? nlohmann::ordered_json(*prompt.criterion.description)
          : nlohmann::ordered_json();
  auto& instr = j["instruction"];
  instr["question"] = prompt.instruction.question;
  instr["source"] = ToString(prompt.instruction.source);
  instr["refinement"] = ToString(prompt.instruction.refinement);
  instr["history"] = nlohmann::ordered_json::array();
  for (const auto& rev : prompt.instruction.history) {
    nlohmann::ordered_json r;
    r["question"] = rev.question;
    r["author"] = rev.author;
    r["step"] = rev.step;
    instr["history"].push_back(std::move(r));
  }
  j["examples"] = nlohmann::ordered_json::array();
  for (const auto& ex : prompt.examples) {
    nlohmann::ordered_json e;
    e["text"] = ex.text;
    e["label"] = ToString(ex.label);
    e["origin"] = ToString(ex.origin);
    e["labeler"] = ToString(ex.labeler);
    e["source_id"] = ex.source_id ? nlohmann::ordered_json(*ex.source_id)
                                  : nlohmann::ordered_json();
    j["examples"].push_back(std::move(e));
  }
  j["student_model"] = prompt.student_model;
  j["render_template"] = prompt.render_template;
  j["decoding"]["temperature"] = 0.0;
  j["decoding"]["max_output_tokens"] = 5;
  j["config"] = ConfigToJson(prompt.config);
  UsageLedger ledger;
  for (const auto& u : prompt.usage) ledger.Add(u);
  j["usage"] = ledger.ToJson();
  return j;
}

SlicingPrompt PromptFromJson(const nlohmann::json& j) {
  SlicingPrompt prompt;
  try {
    if (j.value("format", std::string()) != "semslice-prompt/v1") {
      throw ConfigError("not a semslice prompt artifact");
    }
    prompt.criterion.name = j.at("criterion").at("name").get<std::string>();
    const auto& desc = j.at("criterion").at("description");
    if (!desc.is_null()) prompt.criterion.description = desc.get<std::string>();
    prompt.config = ConfigFromJson(j.at("config"));
    const auto& instr = j.at("instruction");
    prompt.instruction.question = instr.at("question").get<std::string>();
    prompt.instruction.source = prompt.config.instruction_source;
    prompt.instruction.refinement = prompt.config.instruction_refinement;
    for (const auto& r : instr.at("history")) {
      prompt.instruction.history.push_back({r.at("question").get<std::string>(),
                                            r.at("author").get<std::string>(),
                                            r.at("step").get<std::string>()});
    }
    for (const auto& e : j.at("examples")) {
      FewShotExample ex;
      ex.text = e.at("text").get<std::string>();
      const std::string label = e.at("label").get<std::string>();
      if (label != "yes" && label != "no") {
        throw ConfigError("example label must be yes or no");
      }
      ex.label = label == "yes" ? Label::kYes : Label::kNo;
      const std::string origin = e.at("origin").get<std::string>();
      ex.origin = origin == "synthesized" ? ExampleOrigin::kSynthesized
                                          : ExampleOrigin::kProvided;
      const std::string labeler = e.at("labeler").get<std::string>();
      ex.labeler = labeler == "teacher"   ? ExampleLabeler::kTeacher
                   : labeler == "student" ? ExampleLabeler::kStudent
                                          : ExampleLabeler::kNone;
      if (!e.at("source_id").is_null()) {
        ex.source_id = e.at("source_id").get<std::string>();
      }
      prompt.examples.push_back(std::move(ex));
    }
    prompt.student_model = j.at("student_model").get<std::string>();
    prompt.render_template = j.at("render_template").get<std::string>();
    if (prompt.render_template != templates::kSliceLabelingId) {
      throw ConfigError("unsupported render template '" +
                        prompt.render_template + "'");
    }
    if (j.contains("usage")) {
      prompt.usage = UsageLedger::EntriesFromJson(j.at("usage"));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed prompt artifact: ") + e.what());
  }
  return prompt;
}

}  // namespace semslice
