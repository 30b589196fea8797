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

#ifndef SEMSLICE_TEMPLATES_HPP_
#define SEMSLICE_TEMPLATES_HPP_

#include <string_view>

// Prompt templates, byte-identical to the assets under templates/. Literal
// braces are escaped as "{{" / "}}"; single-brace names are substitution
// fields.
namespace semslice::templates {

std::string_view InstructionGeneration();
std::string_view InstructionRefinement();
std::string_view SliceLabeling();
std::string_view ExampleSynthesis();

// Identifies the labeling template in serialized prompt artifacts.
inline constexpr std::string_view kSliceLabelingId = "slice_labeling/v1";

}  // namespace semslice::templates

#endif  // SEMSLICE_TEMPLATES_HPP_
