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

#ifndef SEMSLICE_CLI_HPP_
#define SEMSLICE_CLI_HPP_

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "semslice/promptgen.hpp"

namespace semslice::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitGated = 1,     // eval --gate found a flagged slice
  kExitUsage = 2,     // bad flags or config
  kExitPipeline = 3,  // dataset, backend or evaluation failure
};

// Runs the tool with `args` (without the program name). Never throws.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

// Opens `text` in $EDITOR through a temporary file and returns the edited
// content without its trailing newline. Throws ConfigError when EDITOR is
// unset, Error when the editor exits non-zero.
std::string EditWithEditor(const std::string& text);

// "<slug>-<preset>-<UTC timestamp>" under `parent`, with a numeric suffix
// when that directory already exists.
std::filesystem::path DefaultRunDir(const std::filesystem::path& parent,
                                    const std::string& criterion,
                                    const std::string& preset);

// Criteria file: one criterion per line, "name" or "name: description".
// Blank lines and lines starting with '#' are skipped.
std::vector<SlicingCriterion> ParseCriteriaFile(const std::string& content);

}  // namespace semslice::cli

#endif  // SEMSLICE_CLI_HPP_
