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

#ifndef SEMSLICE_BACKEND_HPP_
#define SEMSLICE_BACKEND_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace semslice {

struct CompletionRequest {
  std::string model_id;
  std::string prompt_text;
  double temperature = 0.0;  // [0, 2]
  int max_output_tokens = 16;
  std::vector<std::string> stop_sequences;
};

// Throws ConfigError if the request violates its invariants.
void ValidateRequest(const CompletionRequest& req);

struct CompletionResponse {
  std::string text;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  bool cached = false;
  double latency_ms = 0.0;
};

// Approximate token count used when a provider reports no usage: words
// (runs of alphanumerics or non-ASCII bytes) plus individual punctuation
// characters, scaled by `fudge` and rounded up. Monotone under
// concatenation; CountTokens("") == 0.
std::int64_t CountTokens(std::string_view text, double fudge = 1.3);

// Stable content digest (hex SHA-256) over every request field.
std::string CacheKey(const CompletionRequest& req);

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  // Exactly one response per call; throws BackendError / ConfigError.
  virtual CompletionResponse Complete(const CompletionRequest& req) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic scripted backend for offline runs and tests.

enum class MatchScope {
  kPrompt,     // substring of the full prompt
  kQueryText,  // substring of the text being labeled (final "Text: ..." line)
};

struct MockRule {
  std::optional<std::string> model_id;  // unset = any model
  MatchScope scope = MatchScope::kQueryText;
  std::vector<std::string> any_of;  // case-insensitive substrings
  std::string reply;
};

// The text under classification in a rendered labeling prompt, i.e. the
// content between the last "Text: " and the trailing "\nAnswer: ".
// Returns nullopt for prompts that do not end in the labeling suffix.
std::optional<std::string> ExtractQueryText(std::string_view prompt);

class MockBackend : public CompletionBackend {
 public:
  using Handler =
      std::function<std::optional<std::string>(const CompletionRequest&)>;

  // Empty `models` accepts any model id.
  explicit MockBackend(std::set<std::string> models = {});

  // Lookup order: exact prompt table, handler, rules (first match), default.
  MockBackend& Script(std::string prompt, std::string reply);
  MockBackend& AddRule(MockRule rule);
  MockBackend& SetHandler(Handler handler);
  MockBackend& SetDefault(std::string reply);

  CompletionResponse Complete(const CompletionRequest& req) override;

  std::size_t call_count() const;
  // One JSON object per call, in call order.
  nlohmann::ordered_json Transcript() const;

 private:
  std::set<std::string> models_;
  std::map<std::string, std::string> exact_;
  std::vector<MockRule> rules_;
  Handler handler_;
  std::optional<std::string> default_reply_;
  mutable std::mutex mu_;
  nlohmann::ordered_json transcript_ = nlohmann::ordered_json::array();
};

// Builds a MockBackend from a JSON script:
//   {"models": [...], "default": "no",
//    "exact": {"<prompt>": "<reply>"},
//    "rules": [{"model": "m", "scope": "query_text"|"prompt",
//               "contains": ["kw", ...], "reply": "yes"}]}
std::shared_ptr<MockBackend> MockBackendFromJson(const nlohmann::json& script);

// ---------------------------------------------------------------------------
// Content-addressed on-disk cache: one "<cache_key>.json" file per entry.

class DiskCache {
 public:
  explicit DiskCache(std::filesystem::path dir);

  std::optional<CompletionResponse> Get(const std::string& key) const;
  void Put(const std::string& key, const CompletionRequest& req,
           const CompletionResponse& resp);
  // Writes for the same key are serialized; different keys proceed freely.
  std::mutex& LockFor(const std::string& key);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  static constexpr std::size_t kStripes = 64;
  std::filesystem::path dir_;
  std::mutex stripes_[kStripes];
};

// Serves repeated requests from a DiskCache; misses go to `inner`.
class CachingBackend : public CompletionBackend {
 public:
  CachingBackend(std::shared_ptr<CompletionBackend> inner,
                 std::shared_ptr<DiskCache> cache);

  CompletionResponse Complete(const CompletionRequest& req) override;

 private:
  std::shared_ptr<CompletionBackend> inner_;
  std::shared_ptr<DiskCache> cache_;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible chat-completions client.

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  // Replaceable so tests do not actually sleep.
  std::function<void(std::chrono::milliseconds)> sleep;

  // Delay before retry number `attempt` (1-based), jittered into
  // [base/2, base] where base = initial * multiplier^(attempt-1).
  std::chrono::milliseconds BackoffFor(int attempt) const;
};

struct Endpoint {
  std::string base_url;  // e.g. "http://127.0.0.1:8000/v1"
  std::string api_key;   // may be empty for local servers
};

// Runs `fn` under `policy`, retrying on transient BackendError.
nlohmann::json WithRetries(const RetryPolicy& policy,
                           const std::function<nlohmann::json()>& fn);

// POSTs JSON to base_url + path with bearer auth. Network failures, 408, 429
// and 5xx raise transient BackendError; provider error payloads raise
// non-transient BackendError (ContextLimitError for context overflows).
nlohmann::json PostJson(const Endpoint& endpoint, std::string_view path,
                        const nlohmann::json& body,
                        std::chrono::seconds timeout);

nlohmann::json ChatRequestBody(const CompletionRequest& req);
// Extracts choices[0].message.content and usage (falling back to
// CountTokens). Throws BackendError on malformed payloads.
CompletionResponse ParseChatResponse(const nlohmann::json& body,
                                     const CompletionRequest& req);

class HttpBackend : public CompletionBackend {
 public:
  struct Options {
    std::map<std::string, Endpoint> models;  // model id -> endpoint
    RetryPolicy retry;
    int max_in_flight_per_endpoint = 8;
    std::chrono::seconds timeout{120};
  };

  explicit HttpBackend(Options options);
  ~HttpBackend() override;

  CompletionResponse Complete(const CompletionRequest& req) override;

  // Number of HTTP attempts issued so far (including retries).
  std::size_t network_calls() const;

 private:
  struct Gate;
  Options options_;
  std::map<std::string, std::unique_ptr<Gate>> gates_;  // per base_url
  mutable std::mutex mu_;
  std::size_t network_calls_ = 0;
};

// ---------------------------------------------------------------------------
// Usage accounting and role bindings.

enum class PipelineStep {
  kInstructionGeneration,
  kInstructionRefinement,
  kExampleLabeling,
  kExampleSynthesis,
  kSliceLabeling,
};

std::string_view ToString(PipelineStep step);
PipelineStep ParsePipelineStep(std::string_view name);

struct StepUsage {
  std::string step;
  std::string model_id;
  std::int64_t calls = 0;
  std::int64_t cached_calls = 0;
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
};

// Thread-safe token tally keyed by (step, model).
class UsageLedger {
 public:
  void Record(PipelineStep step, const std::string& model_id,
              const CompletionResponse& resp);
  void Add(const StepUsage& usage);
  std::vector<StepUsage> Entries() const;  // sorted by (step, model)
  nlohmann::ordered_json ToJson() const;
  static std::vector<StepUsage> EntriesFromJson(const nlohmann::json& j);

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, StepUsage> entries_;
};

enum class Role { kStudent, kTeacher, kGenerator };

std::string_view ToString(Role role);

// A model bound to a pipeline role with its decoding defaults.
struct BackendRole {
  Role role = Role::kStudent;
  std::string model_id;
  std::shared_ptr<CompletionBackend> backend;
  double temperature = 0.0;
  int max_output_tokens = 5;
  std::shared_ptr<UsageLedger> usage;  // optional

  CompletionResponse Complete(std::string prompt, PipelineStep step) const;
};

// Creative steps run at temperature 1, classification at temperature 0.
BackendRole MakeRole(Role role, std::string model_id,
                     std::shared_ptr<CompletionBackend> backend,
                     std::shared_ptr<UsageLedger> usage = nullptr);

// Routes requests to per-model backends; unknown model ids raise
// ConfigError.
class ModelRouter : public CompletionBackend {
 public:
  void Bind(const std::string& model_id,
            std::shared_ptr<CompletionBackend> backend);
  CompletionResponse Complete(const CompletionRequest& req) override;

 private:
  std::map<std::string, std::shared_ptr<CompletionBackend>> routes_;
};

}  // namespace semslice

#endif  // SEMSLICE_BACKEND_HPP_
