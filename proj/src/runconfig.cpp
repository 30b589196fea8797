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

#include "semslice/runconfig.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "semslice/error.hpp"

namespace semslice {
namespace {

template <typename E>
struct Vocab {
  E value;
  std::string_view name;
};

constexpr std::array<Vocab<InputSource>, 2> kInputSources{{
    {InputSource::kProvided, "provided"},
    {InputSource::kProvidedSynthesized, "provided+synthesized"},
}};
constexpr std::array<Vocab<SamplerKind>, 2> kSamplers{{
    {SamplerKind::kRandom, "random"},
    {SamplerKind::kDiversity, "diversity"},
}};
constexpr std::array<Vocab<LabelerKind>, 2> kLabelers{{
    {LabelerKind::kStudent, "student"},
    {LabelerKind::kTeacher, "teacher"},
}};
constexpr std::array<Vocab<InstructionSource>, 3> kInstructionSources{{
    {InstructionSource::kTemplate, "template"},
    {InstructionSource::kModel, "model"},
    {InstructionSource::kHumanTemplate, "human+template"},
}};
constexpr std::array<Vocab<Refinement>, 3> kRefinements{{
    {Refinement::kNone, "none"},
    {Refinement::kModel, "model"},
    {Refinement::kHumanModel, "human+model"},
}};

template <typename E, std::size_t N>
std::string_view NameOf(const std::array<Vocab<E>, N>& vocab, E value) {
  for (const auto& v : vocab) {
    if (v.value == value) return v.name;
  }
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> Lookup(const std::array<Vocab<E>, N>& vocab,
                        std::string_view name) {
  for (const auto& v : vocab) {
    if (v.name == name) return v.value;
  }
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string Choices(const std::array<Vocab<E>, N>& vocab) {
  std::string out;
  for (const auto& v : vocab) {
    if (!out.empty()) out += ", ";
    out += v.name;
  }
  return out;
}

SliceConfig ZeroShot(std::string name, InstructionSource source,
                     Refinement refinement) {
  SliceConfig c;
  c.preset = std::move(name);
  c.few_shot = false;
  c.instruction_source = source;
  c.instruction_refinement = refinement;
  return c;
}

SliceConfig FewShot(std::string name, InputSource input, SamplerKind sampler,
                    LabelerKind labeler, InstructionSource source,
                    Refinement refinement) {
  SliceConfig c;
  c.preset = std::move(name);
  c.few_shot = true;
  c.input_source = input;
  c.sampler = sampler;
  c.labeler = labeler;
  c.instruction_source = source;
  c.instruction_refinement = refinement;
  return c;
}

const std::vector<SliceConfig>& Presets() {
  using IS = InstructionSource;
  using R = Refinement;
  static const std::vector<SliceConfig> presets = {
      ZeroShot("M_zero-shot", IS::kTemplate, R::kNone),
      FewShot("M_few-shot", InputSource::kProvided, SamplerKind::kRandom,
              LabelerKind::kStudent, IS::kTemplate, R::kNone),
      FewShot("M_fs-div", InputSource::kProvided, SamplerKind::kDiversity,
              LabelerKind::kStudent, IS::kTemplate, R::kNone),
      FewShot("M_fs-teacher", InputSource::kProvided, SamplerKind::kDiversity,
              LabelerKind::kTeacher, IS::kTemplate, R::kNone),
      FewShot("M_fs-syn", InputSource::kProvidedSynthesized,
              SamplerKind::kDiversity, LabelerKind::kTeacher, IS::kTemplate,
              R::kNone),
      ZeroShot("M_zs-model", IS::kModel, R::kNone),
      ZeroShot("M_zs-tmodel", IS::kTemplate, R::kModel),
      ZeroShot("M_zs-hai", IS::kHumanTemplate, R::kHumanModel),
      FewShot("M_fs-hai", InputSource::kProvided, SamplerKind::kDiversity,
              LabelerKind::kTeacher, IS::kHumanTemplate, R::kHumanModel),
  };
  return presets;
}

const std::vector<std::string> kKnownKeys = {
    "preset",          "few_shot",           "few_shot_size",
    "input_source",    "sampler",            "labeler",
    "instruction_source", "instruction_refinement", "student_model",
    "teacher_model",   "generator_model",    "seed",
};

// Reads an optional enum-valued field into `slot`. null clears it.
template <typename E, std::size_t N>
void ReadEnum(const nlohmann::json& j, const std::string& key,
              const std::array<Vocab<E>, N>& vocab, std::optional<E>& slot,
              std::vector<ConfigIssue>& errors) {
  if (!j.contains(key)) return;
  const auto& value = j.at(key);
  if (value.is_null()) {
    slot.reset();
    return;
  }
  if (!value.is_string()) {
    errors.push_back({key, "must be a string (one of: " + Choices(vocab) + ")"});
    return;
  }
  const auto parsed = Lookup(vocab, value.get<std::string>());
  if (!parsed) {
    errors.push_back({key, "unknown value '" + value.get<std::string>() +
                               "' (expected one of: " + Choices(vocab) + ")"});
    return;
  }
  slot = parsed;
}

void ReadModel(const nlohmann::json& j, const std::string& key,
               std::string& slot, std::vector<ConfigIssue>& errors) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) {
    errors.push_back({key, "must be a string"});
    return;
  }
  slot = j.at(key).get<std::string>();
}

}  // namespace

std::string_view ToString(InputSource v) { return NameOf(kInputSources, v); }
std::string_view ToString(SamplerKind v) { return NameOf(kSamplers, v); }
std::string_view ToString(LabelerKind v) { return NameOf(kLabelers, v); }
std::string_view ToString(InstructionSource v) {
  return NameOf(kInstructionSources, v);
}
std::string_view ToString(Refinement v) { return NameOf(kRefinements, v); }

const std::vector<std::string>& PresetNames() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& p : Presets()) out.push_back(p.preset);
    return out;
  }();
  return names;
}

SliceConfig NamedPreset(std::string_view name) {
  for (const auto& p : Presets()) {
    if (p.preset == name) return p;
  }
  std::string known;
  for (const auto& n : PresetNames()) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown preset '" + std::string(name) +
                    "' (known: " + known + ")");
}

std::string DescribeConfig(const SliceConfig& c) {
  std::string out;
  if (c.few_shot) {
    out += "few-shot x" + std::to_string(c.few_shot_size) + " [input " +
           std::string(ToString(*c.input_source)) + ", sampler " +
           std::string(ToString(*c.sampler)) + ", labeler " +
           std::string(ToString(*c.labeler)) + "]";
  } else {
    out += "zero-shot";
  }
  out += "; instruction " + std::string(ToString(c.instruction_source)) +
         ", refinement " + std::string(ToString(c.instruction_refinement));
  return out;
}

std::string ValidationResult::ErrorSummary() const {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += "; ";
    out += e.field + ": " + e.message;
  }
  return out;
}

ValidationResult ValidateConfig(SliceConfig c, ValidateOptions options) {
  ValidationResult result;
  auto& errors = result.errors;
  auto& warnings = result.warnings;

  if (c.few_shot_size < 1) {
    errors.push_back({"few_shot_size", "must be a positive integer"});
  }
  if (!c.few_shot) {
    if (c.input_source == InputSource::kProvidedSynthesized) {
      errors.push_back({"input_source",
                        "provided+synthesized requires few_shot = true"});
    } else {
      if (c.input_source) {
        warnings.push_back({"input_source", "ignored because few_shot = false"});
      }
      if (c.sampler) {
        warnings.push_back({"sampler", "ignored because few_shot = false"});
      }
      if (c.labeler) {
        warnings.push_back({"labeler", "ignored because few_shot = false"});
      }
      c.input_source.reset();
      c.sampler.reset();
      c.labeler.reset();
    }
  } else {
    if (!c.input_source) c.input_source = InputSource::kProvided;
    if (!c.sampler) c.sampler = SamplerKind::kRandom;
    if (!c.labeler) c.labeler = LabelerKind::kStudent;
  }
  if (!options.interactive) {
    if (c.instruction_source == InstructionSource::kHumanTemplate) {
      errors.push_back({"instruction_source",
                        "human+template requires an interactive run"});
    }
    if (c.instruction_refinement == Refinement::kHumanModel) {
      errors.push_back({"instruction_refinement",
                        "human+model requires an interactive run"});
    }
  }
  for (const auto& [field, model] :
       {std::pair<const char*, const std::string*>{"student_model",
                                                   &c.student_model},
        {"teacher_model", &c.teacher_model},
        {"generator_model", &c.generator_model}}) {
    if (model->empty()) errors.push_back({field, "must be a non-empty model id"});
  }
  if (c.preset.empty()) c.preset = "custom";
  if (errors.empty()) result.config = std::move(c);
  return result;
}

ValidationResult ValidateConfigJson(
    const nlohmann::json& j, ValidateOptions options,
    const std::vector<std::string>& ignored_sections) {
  ValidationResult result;
  if (!j.is_object()) {
    result.errors.push_back({"", "configuration must be a JSON object"});
    return result;
  }
  auto& errors = result.errors;

  SliceConfig c;
  if (j.contains("preset")) {
    if (!j["preset"].is_string()) {
      errors.push_back({"preset", "must be a string"});
    } else {
      try {
        c = NamedPreset(j["preset"].get<std::string>());
      } catch (const ConfigError& e) {
        errors.push_back({"preset", e.what()});
      }
    }
  }
  for (const auto& [key, unused] : j.items()) {
    const bool known =
        std::find(kKnownKeys.begin(), kKnownKeys.end(), key) != kKnownKeys.end();
    const bool ignored = std::find(ignored_sections.begin(),
                                   ignored_sections.end(),
                                   key) != ignored_sections.end();
    if (!known && !ignored) errors.push_back({key, "unknown field"});
  }
  const bool base_from_preset = j.contains("preset");
  if (!base_from_preset) c.preset = "custom";

  if (j.contains("few_shot")) {
    if (j["few_shot"].is_boolean()) {
      c.few_shot = j["few_shot"].get<bool>();
    } else {
      errors.push_back({"few_shot", "must be a boolean"});
    }
  }
  if (j.contains("few_shot_size")) {
    if (j["few_shot_size"].is_number_integer()) {
      c.few_shot_size = j["few_shot_size"].get<int>();
    } else {
      errors.push_back({"few_shot_size", "must be a positive integer"});
    }
  }
  ReadEnum(j, "input_source", kInputSources, c.input_source, errors);
  ReadEnum(j, "sampler", kSamplers, c.sampler, errors);
  ReadEnum(j, "labeler", kLabelers, c.labeler, errors);
  std::optional<InstructionSource> source = c.instruction_source;
  ReadEnum(j, "instruction_source", kInstructionSources, source, errors);
  c.instruction_source = source.value_or(InstructionSource::kTemplate);
  std::optional<Refinement> refinement = c.instruction_refinement;
  ReadEnum(j, "instruction_refinement", kRefinements, refinement, errors);
  c.instruction_refinement = refinement.value_or(Refinement::kNone);
  ReadModel(j, "student_model", c.student_model, errors);
  ReadModel(j, "teacher_model", c.teacher_model, errors);
  ReadModel(j, "generator_model", c.generator_model, errors);
  if (j.contains("seed")) {
    if (j["seed"].is_number_unsigned()) {
      c.seed = j["seed"].get<std::uint64_t>();
    } else {
      errors.push_back({"seed", "must be a non-negative integer"});
    }
  } else if (options.require_seed) {
    errors.push_back({"seed", "is required in configuration files"});
  }

  ValidationResult checked = ValidateConfig(std::move(c), options);
  errors.insert(errors.end(), checked.errors.begin(), checked.errors.end());
  result.warnings = std::move(checked.warnings);
  if (!errors.empty()) return result;

  // Overrides that change the method turn a preset into a derived config.
  SliceConfig validated = std::move(*checked.config);
  if (base_from_preset) {
    SliceConfig probe = NamedPreset(validated.preset);
    probe.few_shot_size = validated.few_shot_size;
    probe.seed = validated.seed;
    probe.student_model = validated.student_model;
    probe.teacher_model = validated.teacher_model;
    probe.generator_model = validated.generator_model;
    if (!(probe == validated)) validated.preset += "+custom";
  }
  result.config = std::move(validated);
  return result;
}

nlohmann::ordered_json ConfigToJson(const SliceConfig& c) {
  nlohmann::ordered_json j;
  j["preset"] = c.preset;
  j["few_shot"] = c.few_shot;
  j["few_shot_size"] = c.few_shot_size;
  j["input_source"] = c.input_source
                          ? nlohmann::ordered_json(ToString(*c.input_source))
                          : nlohmann::ordered_json();
  j["sampler"] = c.sampler ? nlohmann::ordered_json(ToString(*c.sampler))
                           : nlohmann::ordered_json();
  j["labeler"] = c.labeler ? nlohmann::ordered_json(ToString(*c.labeler))
                           : nlohmann::ordered_json();
  j["instruction_source"] = ToString(c.instruction_source);
  j["instruction_refinement"] = ToString(c.instruction_refinement);
  j["student_model"] = c.student_model;
  j["teacher_model"] = c.teacher_model;
  j["generator_model"] = c.generator_model;
  j["seed"] = c.seed;
  return j;
}

SliceConfig ConfigFromJson(const nlohmann::json& j) {
  std::vector<ConfigIssue> errors;
  SliceConfig c;
  try {
    c.preset = j.at("preset").get<std::string>();
    c.few_shot = j.at("few_shot").get<bool>();
    c.few_shot_size = j.at("few_shot_size").get<int>();
    ReadEnum(j, "input_source", kInputSources, c.input_source, errors);
    ReadEnum(j, "sampler", kSamplers, c.sampler, errors);
    ReadEnum(j, "labeler", kLabelers, c.labeler, errors);
    std::optional<InstructionSource> source;
    ReadEnum(j, "instruction_source", kInstructionSources, source, errors);
    std::optional<Refinement> refinement;
    ReadEnum(j, "instruction_refinement", kRefinements, refinement, errors);
    if (!source) errors.push_back({"instruction_source", "missing"});
    if (!refinement) errors.push_back({"instruction_refinement", "missing"});
    c.instruction_source = source.value_or(InstructionSource::kTemplate);
    c.instruction_refinement = refinement.value_or(Refinement::kNone);
    c.student_model = j.at("student_model").get<std::string>();
    c.teacher_model = j.at("teacher_model").get<std::string>();
    c.generator_model = j.at("generator_model").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed configuration snapshot: ") +
                      e.what());
  }
  if (!errors.empty()) {
    ValidationResult r;
    r.errors = std::move(errors);
    throw ConfigError("malformed configuration snapshot: " + r.ErrorSummary());
  }
  return c;
}

std::string ConfigSnapshot(const SliceConfig& config) {
  return ConfigToJson(config).dump();
}

}  // namespace semslice
