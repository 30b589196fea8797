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

#include "doctest.h"
#include "semslice/error.hpp"

using namespace semslice;

namespace {

struct Row {
  const char* name;
  bool few_shot;
  std::optional<InputSource> input;
  std::optional<SamplerKind> sampler;
  std::optional<LabelerKind> labeler;
  InstructionSource source;
  Refinement refinement;
};

// The configuration table, one row per method.
const Row kTable[] = {
    {"M_zero-shot", false, {}, {}, {}, InstructionSource::kTemplate, Refinement::kNone},
    {"M_few-shot", true, InputSource::kProvided, SamplerKind::kRandom,
     LabelerKind::kStudent, InstructionSource::kTemplate, Refinement::kNone},
    {"M_fs-div", true, InputSource::kProvided, SamplerKind::kDiversity,
     LabelerKind::kStudent, InstructionSource::kTemplate, Refinement::kNone},
    {"M_fs-teacher", true, InputSource::kProvided, SamplerKind::kDiversity,
     LabelerKind::kTeacher, InstructionSource::kTemplate, Refinement::kNone},
    {"M_fs-syn", true, InputSource::kProvidedSynthesized, SamplerKind::kDiversity,
     LabelerKind::kTeacher, InstructionSource::kTemplate, Refinement::kNone},
    {"M_zs-model", false, {}, {}, {}, InstructionSource::kModel, Refinement::kNone},
    {"M_zs-tmodel", false, {}, {}, {}, InstructionSource::kTemplate, Refinement::kModel},
    {"M_zs-hai", false, {}, {}, {}, InstructionSource::kHumanTemplate,
     Refinement::kHumanModel},
    {"M_fs-hai", true, InputSource::kProvided, SamplerKind::kDiversity,
     LabelerKind::kTeacher, InstructionSource::kHumanTemplate, Refinement::kHumanModel},
};

}  // namespace

TEST_CASE("presets match the configuration table row for row") {
  REQUIRE(PresetNames().size() == 9);
  std::size_t i = 0;
  for (const Row& row : kTable) {
    CAPTURE(row.name);
    CHECK(PresetNames()[i++] == row.name);
    const SliceConfig c = NamedPreset(row.name);
    CHECK(c.preset == row.name);
    CHECK(c.few_shot == row.few_shot);
    CHECK(c.input_source == row.input);
    CHECK(c.sampler == row.sampler);
    CHECK(c.labeler == row.labeler);
    CHECK(c.instruction_source == row.source);
    CHECK(c.instruction_refinement == row.refinement);
    CHECK(c.few_shot_size == 8);
    CHECK(c.student_model == "flan-t5-xxl");
    CHECK(c.teacher_model == "gpt-4-turbo-preview");
  }
  CHECK_THROWS_AS(NamedPreset("M_unknown"), ConfigError);
}

TEST_CASE("presets round-trip through JSON") {
  for (const auto& name : PresetNames()) {
    const SliceConfig c = NamedPreset(name);
    CHECK(ConfigFromJson(nlohmann::json::parse(ConfigToJson(c).dump())) == c);
    CHECK(ConfigSnapshot(ConfigFromJson(nlohmann::json::parse(ConfigSnapshot(c)))) ==
          ConfigSnapshot(c));
  }
}

TEST_CASE("human modes need the interactive flag") {
  const auto r = ValidateConfig(NamedPreset("M_zs-hai"), {.interactive = false});
  CHECK_FALSE(r.ok());
  bool named = false;
  for (const auto& e : r.errors) named |= e.field == "instruction_refinement";
  CHECK(named);
  CHECK(ValidateConfig(NamedPreset("M_zs-hai"), {.interactive = true}).ok());
}

TEST_CASE("zero-shot configs drop few-shot fields with a warning") {
  SliceConfig c = NamedPreset("M_zero-shot");
  c.sampler = SamplerKind::kRandom;
  const auto r = ValidateConfig(c, {});
  REQUIRE(r.ok());
  CHECK_FALSE(r.config->sampler.has_value());
  CHECK_FALSE(r.warnings.empty());

  c = NamedPreset("M_zero-shot");
  c.input_source = InputSource::kProvidedSynthesized;
  CHECK_FALSE(ValidateConfig(c, {}).ok());
}

TEST_CASE("config files: defaults, overrides and unknown keys") {
  auto r = ValidateConfigJson(nlohmann::json::parse(R"({"few_shot": true, "seed": 3})"), {});
  REQUIRE(r.ok());
  CHECK(r.config->few_shot_size == 8);
  CHECK(r.config->sampler == SamplerKind::kRandom);
  CHECK(r.config->seed == 3);

  r = ValidateConfigJson(nlohmann::json::parse(R"({"preset": "M_fs-div", "seed": 1})"), {});
  REQUIRE(r.ok());
  CHECK(r.config->preset == "M_fs-div");

  r = ValidateConfigJson(
      nlohmann::json::parse(R"({"preset": "M_fs-div", "labeler": "teacher", "seed": 1})"), {});
  REQUIRE(r.ok());
  CHECK(r.config->preset == "M_fs-div+custom");

  r = ValidateConfigJson(nlohmann::json::parse(R"({"bogus": 1, "seed": 0})"), {});
  CHECK_FALSE(r.ok());
  r = ValidateConfigJson(nlohmann::json::parse(R"({"preset": "M_few-shot"})"),
                         {.require_seed = true});
  CHECK_FALSE(r.ok());
  r = ValidateConfigJson(
      nlohmann::json::parse(R"({"seed": 0, "backend": {"anything": true}})"), {});
  CHECK(r.ok());
  r = ValidateConfigJson(nlohmann::json::parse(R"({"seed": 0, "sampler": "smart"})"), {});
  CHECK_FALSE(r.ok());
}
