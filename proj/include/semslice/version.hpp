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

#ifndef SEMSLICE_VERSION_HPP_
#define SEMSLICE_VERSION_HPP_

#include <string_view>

namespace semslice {

std::string_view Version();
// `git describe` of the source tree at configure time, "unknown" outside git.
std::string_view GitDescribe();

}  // namespace semslice

#endif  // SEMSLICE_VERSION_HPP_
