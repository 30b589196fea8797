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

#ifndef SEMSLICE_IO_HPP_
#define SEMSLICE_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace semslice {

// Whole-file read; throws Error when the file cannot be opened.
std::string ReadFile(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over `path`, so readers never
// observe a partially written file.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view content);

// Lower-case ASCII alphanumerics with single '-' separators.
// "Home & Kitchen" -> "home-kitchen". Empty input yields "".
std::string Slugify(std::string_view text);

std::string_view TrimView(std::string_view s);
std::string Trim(std::string_view s);
std::string ToLowerAscii(std::string_view s);

// Hex SHA-256 digest.
std::string Sha256Hex(std::string_view data);

}  // namespace semslice

#endif  // SEMSLICE_IO_HPP_
