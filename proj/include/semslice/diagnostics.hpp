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

#ifndef SEMSLICE_DIAGNOSTICS_HPP_
#define SEMSLICE_DIAGNOSTICS_HPP_

#include <functional>
#include <mutex>
#include <string>
#include <vector>

namespace semslice {

// Collects non-fatal warnings raised while running a pipeline step.
// Thread-safe; an optional sink sees each warning as it arrives.
class Diagnostics {
 public:
  using Sink = std::function<void(const std::string&)>;

  Diagnostics() = default;
  explicit Diagnostics(Sink sink) : sink_(std::move(sink)) {}

  void Warn(std::string message) {
    std::lock_guard lock(mu_);
    if (sink_) sink_(message);
    warnings_.push_back(std::move(message));
  }

  std::vector<std::string> warnings() const {
    std::lock_guard lock(mu_);
    return warnings_;
  }

 private:
  mutable std::mutex mu_;
  Sink sink_;
  std::vector<std::string> warnings_;
};

// Warns through `diag` when present.
inline void WarnTo(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->Warn(std::move(message));
}

}  // namespace semslice

#endif  // SEMSLICE_DIAGNOSTICS_HPP_
