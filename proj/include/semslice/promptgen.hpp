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

#ifndef SEMSLICE_PROMPTGEN_HPP_
#define SEMSLICE_PROMPTGEN_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "semslice/backend.hpp"
#include "semslice/corpus.hpp"
#include "semslice/diagnostics.hpp"
#include "semslice/runconfig.hpp"
#include "semslice/sampler.hpp"
#include "semslice/templates.hpp"

namespace semslice {

struct SlicingCriterion {
  std::string name;  // short concept phrase, e.g. "Muslim"
  std::optional<std::string> description;

  // Description when present, otherwise the name.
  const std::string& goal_text() const {
    return description && !description->empty() ? *description : name;
  }
};

// One version of an instruction and where it came from.
struct InstructionRevision {
  std::string question;
  std::string author;  // "template", "model" or "human"
  std::string step;    // "generation" or "refinement"
};

struct Instruction {
  std::string question;
  InstructionSource source = InstructionSource::kTemplate;
  Refinement refinement = Refinement::kNone;
  // Every version in order; the last entry always equals `question`.
  std::vector<InstructionRevision> history;
};

enum class Label { kYes, kNo };
enum class ExampleOrigin { kProvided, kSynthesized };
enum class ExampleLabeler { kStudent, kTeacher, kNone };

std::string_view ToString(Label label);
std::string_view ToString(ExampleOrigin origin);
std::string_view ToString(ExampleLabeler labeler);

struct FewShotExample {
  std::string text;
  Label label = Label::kNo;
  ExampleOrigin origin = ExampleOrigin::kProvided;
  ExampleLabeler labeler = ExampleLabeler::kNone;
  std::optional<std::string> source_id;  // dataset id for provided examples
};

struct SlicingPrompt {
  SlicingCriterion criterion;
  Instruction instruction;
  std::vector<FewShotExample> examples;
  std::string student_model;
  std::string render_template{templates::kSliceLabelingId};
  SliceConfig config;
  std::vector<StepUsage> usage;  // prompt-construction token usage
};

// Operator edit step: receives the current text, returns the edited text.
using EditHook = std::function<std::string(const std::string&)>;

// ---------------------------------------------------------------------------
// Rendering. Example blocks are "Text: <t>\nAnswer: <yes|no>" joined by blank
// lines; an empty block collapses together with its trailing blank line.

std::string TemplateInstruction(std::string_view concept_name);
std::string RenderGenerationPrompt(std::string_view goal);
std::string RenderRefinementPrompt(std::string_view question);
std::string RenderLabelingPrompt(std::string_view question,
                                 std::span<const FewShotExample> examples,
                                 std::string_view text);
std::string RenderSynthesisPrompt(std::string_view question,
                                  std::span<const FewShotExample> examples,
                                  std::size_t n, Label label);
std::string RenderPrompt(const SlicingPrompt& prompt, std::string_view text);

// Demonstration pairs (goal, question) shown to the instruction generator.
const std::vector<std::pair<std::string, std::string>>& GenerationDemonstrations();

// Content of the last line beginning with `marker` (case-sensitive),
// trimmed; nullopt when no line carries the marker.
std::optional<std::string> LastMarkedLine(std::string_view text,
                                          std::string_view marker);

// ---------------------------------------------------------------------------
// Pipeline steps.

// Template: "Is the text related to <name>?". Model: asks `generator` and
// falls back to the template (with a warning) on unusable output.
// human+template: the template question merged with the criterion's
// description, then passed through `editor` when one is given.
Instruction GenerateInstruction(const SlicingCriterion& criterion,
                                InstructionSource source,
                                const BackendRole* generator,
                                const EditHook& editor = nullptr,
                                Diagnostics* diag = nullptr);

// One round of model refinement; human+model additionally applies `editor`.
// A reply without a "Revised instruction:" line keeps the prior question.
Instruction RefineInstruction(const Instruction& instruction, Refinement mode,
                              const BackendRole* generator,
                              const EditHook& editor = nullptr,
                              Diagnostics* diag = nullptr);

struct LabelingOutcome {
  std::vector<FewShotExample> examples;  // one per input, same order
  std::size_t unparseable = 0;
  std::size_t failed = 0;  // backend errors after retries
};

// Zero-shot yes/no labeling with a student or teacher role. Unparseable
// replies and failed calls become "no"; more than half failing throws.
LabelingOutcome LabelExamples(const Instruction& instruction,
                              std::span<const Example> inputs,
                              const BackendRole& labeler,
                              Diagnostics* diag = nullptr);

// Parses "Text:" / "Answer:" pairs from a synthesis reply.
std::vector<FewShotExample> ParseSynthesizedPairs(std::string_view reply);

// Up to n synthesized examples carrying `target`. One retry when nothing
// usable comes back, then SynthesisError.
std::vector<FewShotExample> SynthesizeExamples(
    const Instruction& instruction, std::span<const FewShotExample> existing,
    Label target, std::size_t n, const BackendRole& generator,
    Diagnostics* diag = nullptr);

// Orders examples yes/no/yes/... keeping the relative order within a label.
std::vector<FewShotExample> AlternateLabels(std::vector<FewShotExample> examples);

struct PromptBackends {
  BackendRole generator;
  BackendRole teacher;
  BackendRole student;
  EmbeddingProvider* embedder = nullptr;  // required for diversity sampling
  EditHook editor;                        // required for human+* modes
};

// Instruction generation, refinement, sampling, labeling and (optionally)
// synthesis, composed per `config`. `config` must already be validated.
SlicingPrompt BuildPrompt(const SlicingCriterion& criterion,
                          const Dataset& dataset, const SliceConfig& config,
                          const PromptBackends& backends,
                          Diagnostics* diag = nullptr);

nlohmann::ordered_json PromptToJson(const SlicingPrompt& prompt);
SlicingPrompt PromptFromJson(const nlohmann::json& j);

}  // namespace semslice

#endif  // SEMSLICE_PROMPTGEN_HPP_
