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

#ifndef SEMSLICE_ERROR_HPP_
#define SEMSLICE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace semslice {

// Root of every exception thrown by the library. Callers that only need to
// distinguish "pipeline failed" from everything else can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent dataset input.
class DatasetError : public Error {
 public:
  using Error::Error;
};

// Invalid or unknown configuration (model ids, presets, fields).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A completion or embedding request that could not be served.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, bool transient)
      : Error(what), transient_(transient) {}
  explicit BackendError(const std::string& what) : BackendError(what, false) {}

  // Transient failures (network, 429, 5xx) are eligible for retry.
  bool transient() const { return transient_; }

 private:
  bool transient_;
};

// The provider rejected the request because it exceeds the context window.
class ContextLimitError : public BackendError {
 public:
  explicit ContextLimitError(const std::string& what)
      : BackendError(what, false) {}
};

// Example synthesis produced nothing usable.
class SynthesisError : public Error {
 public:
  using Error::Error;
};

// Evaluation preconditions violated (missing labels, foreign ids, ...).
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace semslice

#endif  // SEMSLICE_ERROR_HPP_
