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

#ifndef SEMSLICE_RUNCONFIG_HPP_
#define SEMSLICE_RUNCONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace semslice {

enum class InputSource { kProvided, kProvidedSynthesized };
enum class SamplerKind { kRandom, kDiversity };
enum class LabelerKind { kStudent, kTeacher };
enum class InstructionSource { kTemplate, kModel, kHumanTemplate };
enum class Refinement { kNone, kModel, kHumanModel };

// Wire vocabulary: "provided", "provided+synthesized", "random",
// "diversity", "student", "teacher", "template", "model", "human+template",
// "none", "model", "human+model".
std::string_view ToString(InputSource v);
std::string_view ToString(SamplerKind v);
std::string_view ToString(LabelerKind v);
std::string_view ToString(InstructionSource v);
std::string_view ToString(Refinement v);

inline constexpr int kDefaultFewShotSize = 8;
inline constexpr std::string_view kDefaultStudentModel = "flan-t5-xxl";
inline constexpr std::string_view kDefaultTeacherModel = "gpt-4-turbo-preview";
inline constexpr std::string_view kDefaultGeneratorModel = "gpt-4-turbo-preview";

// One point in the prompt-construction configuration space.
struct SliceConfig {
  std::string preset = "custom";
  bool few_shot = false;
  int few_shot_size = kDefaultFewShotSize;
  // Absent whenever few_shot is false.
  std::optional<InputSource> input_source;
  std::optional<SamplerKind> sampler;
  std::optional<LabelerKind> labeler;
  InstructionSource instruction_source = InstructionSource::kTemplate;
  Refinement instruction_refinement = Refinement::kNone;
  std::string student_model{kDefaultStudentModel};
  std::string teacher_model{kDefaultTeacherModel};
  std::string generator_model{kDefaultGeneratorModel};
  std::uint64_t seed = 0;

  bool synthesis() const {
    return few_shot && input_source == InputSource::kProvidedSynthesized;
  }
  bool needs_interaction() const {
    return instruction_source == InstructionSource::kHumanTemplate ||
           instruction_refinement == Refinement::kHumanModel;
  }

  friend bool operator==(const SliceConfig&, const SliceConfig&) = default;
};

// The nine method names, in table order.
const std::vector<std::string>& PresetNames();
// Throws ConfigError("unknown preset ...") for other names.
SliceConfig NamedPreset(std::string_view name);
// One-line human description of a preset's configuration.
std::string DescribeConfig(const SliceConfig& config);

struct ConfigIssue {
  std::string field;  // JSON field path, e.g. "instruction_refinement"
  std::string message;
};

struct ValidationResult {
  std::optional<SliceConfig> config;  // set iff errors is empty
  std::vector<ConfigIssue> errors;
  std::vector<ConfigIssue> warnings;

  bool ok() const { return errors.empty(); }
  // "field: message" lines joined by "; ".
  std::string ErrorSummary() const;
};

struct ValidateOptions {
  bool interactive = false;
  bool require_seed = false;  // config files must state their seed
};

// Reads a declarative config object. An optional "preset" key seeds the
// fields, explicit keys override it. Keys listed in `ignored_sections`
// (e.g. "backend") are skipped; other unknown keys are errors.
ValidationResult ValidateConfigJson(
    const nlohmann::json& j, ValidateOptions options,
    const std::vector<std::string>& ignored_sections = {"backend",
                                                        "embedding"});

// Checks the invariants of an already-typed config and normalizes it
// (clearing few-shot fields when few_shot is false, filling few-shot
// defaults).
ValidationResult ValidateConfig(SliceConfig config, ValidateOptions options);

// Canonical, field-ordered serialization. Absent fields are null.
nlohmann::ordered_json ConfigToJson(const SliceConfig& config);
// Strict inverse of ConfigToJson; throws ConfigError.
SliceConfig ConfigFromJson(const nlohmann::json& j);
// Compact canonical text embedded in downstream artifacts.
std::string ConfigSnapshot(const SliceConfig& config);

}  // namespace semslice

#endif  // SEMSLICE_RUNCONFIG_HPP_
