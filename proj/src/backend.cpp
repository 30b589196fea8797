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

#include "semslice/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <semaphore>
#include <thread>
#include <utility>

#include "httplib.h"
#include "semslice/error.hpp"
#include "semslice/io.hpp"

namespace semslice {
namespace {

using Clock = std::chrono::steady_clock;

double MillisSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

bool IsWordByte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

constexpr std::string_view kAnswerSuffix = "\nAnswer: ";
constexpr std::string_view kTextMarker = "Text: ";

// Splits "scheme://host[:port]/prefix" into ("scheme://host[:port]",
// "/prefix").
std::pair<std::string, std::string> SplitBaseUrl(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint url must include a scheme: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path_start), prefix};
}

std::string ProviderErrorMessage(const nlohmann::json& body) {
  const auto& err = body.at("error");
  if (err.is_string()) return err.get<std::string>();
  if (err.is_object()) return err.value("message", err.dump());
  return err.dump();
}

bool LooksLikeContextOverflow(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("error")) return false;
  const auto& err = body["error"];
  if (err.is_object() &&
      err.value("code", nlohmann::json()).is_string() &&
      err["code"].get<std::string>() == "context_length_exceeded") {
    return true;
  }
  const std::string message = ToLowerAscii(ProviderErrorMessage(body));
  return message.find("context length") != std::string::npos ||
         message.find("context window") != std::string::npos;
}

}  // namespace

void ValidateRequest(const CompletionRequest& req) {
  if (req.model_id.empty()) throw ConfigError("request has no model id");
  if (req.prompt_text.empty()) throw ConfigError("request prompt is empty");
  if (!std::isfinite(req.temperature) || req.temperature < 0.0 ||
      req.temperature > 2.0) {
    throw ConfigError("temperature must be a finite value in [0, 2]");
  }
  if (req.max_output_tokens <= 0) {
    throw ConfigError("max_output_tokens must be positive");
  }
}

std::int64_t CountTokens(std::string_view text, double fudge) {
  std::int64_t raw = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    if (IsWordByte(c)) {
      if (!in_word) ++raw;
      in_word = true;
    } else {
      in_word = false;
      if (!std::isspace(c)) ++raw;
    }
  }
  if (raw == 0) return 0;
  // The epsilon keeps exact products such as 10 * 1.3 from rounding up.
  return static_cast<std::int64_t>(
      std::ceil(static_cast<double>(raw) * fudge - 1e-9));
}

std::string CacheKey(const CompletionRequest& req) {
  nlohmann::json canonical = nlohmann::json::array(
      {"semslice-completion-v1", req.model_id, req.prompt_text,
       req.temperature, req.max_output_tokens, req.stop_sequences});
  return Sha256Hex(canonical.dump());
}

// ---------------------------------------------------------------------------

std::optional<std::string> ExtractQueryText(std::string_view prompt) {
  if (!prompt.ends_with(kAnswerSuffix)) return std::nullopt;
  std::string_view body = prompt.substr(0, prompt.size() - kAnswerSuffix.size());
  const auto line_marker = body.rfind(std::string("\n") + kTextMarker.data());
  std::size_t start;
  if (line_marker != std::string_view::npos) {
    start = line_marker + 1 + kTextMarker.size();
  } else if (body.starts_with(kTextMarker)) {
    start = kTextMarker.size();
  } else {
    return std::nullopt;
  }
  return std::string(body.substr(start));
}

MockBackend::MockBackend(std::set<std::string> models)
    : models_(std::move(models)) {}

MockBackend& MockBackend::Script(std::string prompt, std::string reply) {
  exact_[std::move(prompt)] = std::move(reply);
  return *this;
}

MockBackend& MockBackend::AddRule(MockRule rule) {
  for (auto& needle : rule.any_of) needle = ToLowerAscii(needle);
  rules_.push_back(std::move(rule));
  return *this;
}

MockBackend& MockBackend::SetHandler(Handler handler) {
  handler_ = std::move(handler);
  return *this;
}

MockBackend& MockBackend::SetDefault(std::string reply) {
  default_reply_ = std::move(reply);
  return *this;
}

CompletionResponse MockBackend::Complete(const CompletionRequest& req) {
  const auto start = Clock::now();
  ValidateRequest(req);
  if (!models_.empty() && !models_.contains(req.model_id)) {
    throw ConfigError("mock backend is not configured for model '" +
                      req.model_id + "'");
  }

  std::optional<std::string> reply;
  if (auto it = exact_.find(req.prompt_text); it != exact_.end()) {
    reply = it->second;
  }
  if (!reply && handler_) reply = handler_(req);
  if (!reply) {
    const std::string lowered_prompt = ToLowerAscii(req.prompt_text);
    const auto query = ExtractQueryText(req.prompt_text);
    const std::string lowered_query = query ? ToLowerAscii(*query) : "";
    for (const MockRule& rule : rules_) {
      if (rule.model_id && *rule.model_id != req.model_id) continue;
      if (rule.scope == MatchScope::kQueryText && !query) continue;
      const std::string& haystack =
          rule.scope == MatchScope::kPrompt ? lowered_prompt : lowered_query;
      const bool hit = std::any_of(
          rule.any_of.begin(), rule.any_of.end(), [&](const std::string& s) {
            return haystack.find(s) != std::string::npos;
          });
      if (hit) {
        reply = rule.reply;
        break;
      }
    }
  }
  if (!reply) reply = default_reply_;
  if (!reply) {
    throw BackendError("mock backend has no scripted reply for this prompt");
  }

  CompletionResponse resp;
  resp.text = *reply;
  resp.input_tokens = CountTokens(req.prompt_text);
  resp.output_tokens = CountTokens(resp.text);
  resp.latency_ms = MillisSince(start);

  std::lock_guard lock(mu_);
  nlohmann::ordered_json entry;
  entry["model"] = req.model_id;
  entry["temperature"] = req.temperature;
  entry["max_tokens"] = req.max_output_tokens;
  entry["prompt"] = req.prompt_text;
  entry["reply"] = resp.text;
  transcript_.push_back(std::move(entry));
  return resp;
}

std::size_t MockBackend::call_count() const {
  std::lock_guard lock(mu_);
  return transcript_.size();
}

nlohmann::ordered_json MockBackend::Transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

std::shared_ptr<MockBackend> MockBackendFromJson(const nlohmann::json& script) {
  try {
    std::set<std::string> models;
    if (script.contains("models")) {
      models = script.at("models").get<std::set<std::string>>();
    }
    auto mock = std::make_shared<MockBackend>(std::move(models));
    if (script.contains("default")) {
      mock->SetDefault(script.at("default").get<std::string>());
    }
    if (script.contains("exact")) {
      for (const auto& [prompt, reply] : script.at("exact").items()) {
        mock->Script(prompt, reply.get<std::string>());
      }
    }
    if (script.contains("rules")) {
      for (const auto& r : script.at("rules")) {
        MockRule rule;
        if (r.contains("model")) rule.model_id = r.at("model").get<std::string>();
        const std::string scope = r.value("scope", std::string("query_text"));
        if (scope == "prompt") {
          rule.scope = MatchScope::kPrompt;
        } else if (scope == "query_text") {
          rule.scope = MatchScope::kQueryText;
        } else {
          throw ConfigError("mock rule scope must be 'prompt' or 'query_text'");
        }
        const auto& contains = r.at("contains");
        rule.any_of = contains.is_string()
                          ? std::vector<std::string>{contains.get<std::string>()}
                          : contains.get<std::vector<std::string>>();
        rule.reply = r.at("reply").get<std::string>();
        mock->AddRule(std::move(rule));
      }
    }
    return mock;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed mock script: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

DiskCache::DiskCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) {
    throw ConfigError("cannot create cache directory " + dir_.string() + ": " +
                      ec.message());
  }
}

std::optional<CompletionResponse> DiskCache::Get(const std::string& key) const {
  const auto path = dir_ / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(ReadFile(path));
    CompletionResponse resp;
    resp.text = j.at("text").get<std::string>();
    resp.input_tokens = j.at("input_tokens").get<std::int64_t>();
    resp.output_tokens = j.at("output_tokens").get<std::int64_t>();
    return resp;
  } catch (const std::exception&) {
    // Corrupt entries are treated as misses and overwritten.
    return std::nullopt;
  }
}

void DiskCache::Put(const std::string& key, const CompletionRequest& req,
                    const CompletionResponse& resp) {
  nlohmann::ordered_json j;
  j["key"] = key;
  j["model"] = req.model_id;
  j["temperature"] = req.temperature;
  j["max_tokens"] = req.max_output_tokens;
  j["prompt"] = req.prompt_text;
  j["text"] = resp.text;
  j["input_tokens"] = resp.input_tokens;
  j["output_tokens"] = resp.output_tokens;
  WriteFileAtomic(dir_ / (key + ".json"), j.dump(2));
}

std::mutex& DiskCache::LockFor(const std::string& key) {
  return stripes_[std::hash<std::string>{}(key) % kStripes];
}

CachingBackend::CachingBackend(std::shared_ptr<CompletionBackend> inner,
                               std::shared_ptr<DiskCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

CompletionResponse CachingBackend::Complete(const CompletionRequest& req) {
  const auto start = Clock::now();
  ValidateRequest(req);
  const std::string key = CacheKey(req);
  std::lock_guard lock(cache_->LockFor(key));
  if (auto hit = cache_->Get(key)) {
    hit->cached = true;
    hit->latency_ms = MillisSince(start);
    return *hit;
  }
  CompletionResponse resp = inner_->Complete(req);
  cache_->Put(key, req, resp);
  return resp;
}

// ---------------------------------------------------------------------------

std::chrono::milliseconds RetryPolicy::BackoffFor(int attempt) const {
  const double base = static_cast<double>(initial_backoff.count()) *
                      std::pow(multiplier, std::max(0, attempt - 1));
  thread_local std::mt19937 rng{std::random_device{}()};
  std::uniform_real_distribution<double> jitter(0.5, 1.0);
  return std::chrono::milliseconds(
      static_cast<std::int64_t>(std::llround(base * jitter(rng))));
}

nlohmann::json WithRetries(const RetryPolicy& policy,
                           const std::function<nlohmann::json()>& fn) {
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const BackendError& e) {
      if (!e.transient()) throw;
      if (attempt >= attempts) {
        throw BackendError("giving up after " + std::to_string(attempt) +
                               " attempts: " + e.what(),
                           false);
      }
    }
    const auto delay = policy.BackoffFor(attempt);
    if (policy.sleep) {
      policy.sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }
}

nlohmann::json PostJson(const Endpoint& endpoint, std::string_view path,
                        const nlohmann::json& body,
                        std::chrono::seconds timeout) {
  const auto [host, prefix] = SplitBaseUrl(endpoint.base_url);
  httplib::Client client(host);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!endpoint.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  }
  const std::string url = prefix + std::string(path);
  auto result = client.Post(url, headers, body.dump(), "application/json");
  if (!result) {
    throw BackendError("request to " + endpoint.base_url + std::string(path) +
                           " failed: " + httplib::to_string(result.error()),
                       true);
  }
  const int status = result->status;
  nlohmann::json payload;
  try {
    payload = nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::parse_error&) {
    payload = nullptr;
  }
  if (status == 408 || status == 429 || status >= 500) {
    throw BackendError("provider returned HTTP " + std::to_string(status),
                       true);
  }
  if (LooksLikeContextOverflow(payload)) {
    throw ContextLimitError("request exceeds the provider context limit: " +
                            ProviderErrorMessage(payload));
  }
  if (payload.is_object() && payload.contains("error") &&
      !payload["error"].is_null()) {
    throw BackendError("provider error (HTTP " + std::to_string(status) +
                       "): " + ProviderErrorMessage(payload));
  }
  if (status < 200 || status >= 300) {
    throw BackendError("provider returned HTTP " + std::to_string(status));
  }
  if (payload.is_null()) {
    throw BackendError("provider returned a non-JSON body");
  }
  return payload;
}

nlohmann::json ChatRequestBody(const CompletionRequest& req) {
  nlohmann::json body = {
      {"model", req.model_id},
      {"messages",
       nlohmann::json::array({{{"role", "user"}, {"content", req.prompt_text}}})},
      {"temperature", req.temperature},
      {"max_tokens", req.max_output_tokens},
  };
  if (!req.stop_sequences.empty()) body["stop"] = req.stop_sequences;
  return body;
}

CompletionResponse ParseChatResponse(const nlohmann::json& body,
                                     const CompletionRequest& req) {
  CompletionResponse resp;
  try {
    const auto& message = body.at("choices").at(0).at("message");
    const auto& content = message.at("content");
    resp.text = content.is_null() ? "" : content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed chat completion payload: ") +
                       e.what());
  }
  const auto usage = body.value("usage", nlohmann::json());
  if (usage.is_object() && usage.contains("prompt_tokens") &&
      usage["prompt_tokens"].is_number_integer()) {
    resp.input_tokens = usage["prompt_tokens"].get<std::int64_t>();
  } else {
    resp.input_tokens = CountTokens(req.prompt_text);
  }
  if (usage.is_object() && usage.contains("completion_tokens") &&
      usage["completion_tokens"].is_number_integer()) {
    resp.output_tokens = usage["completion_tokens"].get<std::int64_t>();
  } else {
    resp.output_tokens = CountTokens(resp.text);
  }
  return resp;
}

struct HttpBackend::Gate {
  explicit Gate(int limit) : slots(limit) {}
  std::counting_semaphore<4096> slots;
};

HttpBackend::HttpBackend(Options options) : options_(std::move(options)) {
  if (options_.max_in_flight_per_endpoint < 1) {
    throw ConfigError("max_in_flight must be at least 1");
  }
  for (const auto& [model, endpoint] : options_.models) {
    SplitBaseUrl(endpoint.base_url);  // validates
    if (!gates_.contains(endpoint.base_url)) {
      gates_.emplace(endpoint.base_url,
                     std::make_unique<Gate>(options_.max_in_flight_per_endpoint));
    }
  }
}

HttpBackend::~HttpBackend() = default;

CompletionResponse HttpBackend::Complete(const CompletionRequest& req) {
  ValidateRequest(req);
  const auto it = options_.models.find(req.model_id);
  if (it == options_.models.end()) {
    throw ConfigError("no endpoint configured for model '" + req.model_id +
                      "'");
  }
  const Endpoint& endpoint = it->second;
  Gate& gate = *gates_.at(endpoint.base_url);
  const nlohmann::json body = ChatRequestBody(req);

  const auto start = Clock::now();
  const nlohmann::json payload = WithRetries(options_.retry, [&] {
    gate.slots.acquire();
    {
      std::lock_guard lock(mu_);
      ++network_calls_;
    }
    try {
      auto out = PostJson(endpoint, "/chat/completions", body, options_.timeout);
      gate.slots.release();
      return out;
    } catch (...) {
      gate.slots.release();
      throw;
    }
  });
  CompletionResponse resp = ParseChatResponse(payload, req);
  resp.latency_ms = MillisSince(start);
  return resp;
}

std::size_t HttpBackend::network_calls() const {
  std::lock_guard lock(mu_);
  return network_calls_;
}

// ---------------------------------------------------------------------------

std::string_view ToString(PipelineStep step) {
  switch (step) {
    case PipelineStep::kInstructionGeneration:
      return "instruction_generation";
    case PipelineStep::kInstructionRefinement:
      return "instruction_refinement";
    case PipelineStep::kExampleLabeling:
      return "example_labeling";
    case PipelineStep::kExampleSynthesis:
      return "example_synthesis";
    case PipelineStep::kSliceLabeling:
      return "slice_labeling";
  }
  return "unknown";
}

PipelineStep ParsePipelineStep(std::string_view name) {
  for (auto step : {PipelineStep::kInstructionGeneration,
                    PipelineStep::kInstructionRefinement,
                    PipelineStep::kExampleLabeling,
                    PipelineStep::kExampleSynthesis,
                    PipelineStep::kSliceLabeling}) {
    if (ToString(step) == name) return step;
  }
  throw ConfigError("unknown pipeline step '" + std::string(name) + "'");
}

void UsageLedger::Record(PipelineStep step, const std::string& model_id,
                         const CompletionResponse& resp) {
  StepUsage usage;
  usage.step = std::string(ToString(step));
  usage.model_id = model_id;
  usage.calls = 1;
  usage.cached_calls = resp.cached ? 1 : 0;
  usage.input_tokens = resp.input_tokens;
  usage.output_tokens = resp.output_tokens;
  Add(usage);
}

void UsageLedger::Add(const StepUsage& usage) {
  std::lock_guard lock(mu_);
  auto& slot = entries_[{usage.step, usage.model_id}];
  slot.step = usage.step;
  slot.model_id = usage.model_id;
  slot.calls += usage.calls;
  slot.cached_calls += usage.cached_calls;
  slot.input_tokens += usage.input_tokens;
  slot.output_tokens += usage.output_tokens;
}

std::vector<StepUsage> UsageLedger::Entries() const {
  std::lock_guard lock(mu_);
  std::vector<StepUsage> out;
  out.reserve(entries_.size());
  for (const auto& [key, usage] : entries_) out.push_back(usage);
  return out;
}

nlohmann::ordered_json UsageLedger::ToJson() const {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& u : Entries()) {
    nlohmann::ordered_json j;
    j["step"] = u.step;
    j["model"] = u.model_id;
    j["calls"] = u.calls;
    j["input_tokens"] = u.input_tokens;
    j["output_tokens"] = u.output_tokens;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<StepUsage> UsageLedger::EntriesFromJson(const nlohmann::json& j) {
  std::vector<StepUsage> out;
  try {
    for (const auto& e : j) {
      StepUsage u;
      u.step = e.at("step").get<std::string>();
      u.model_id = e.at("model").get<std::string>();
      u.calls = e.value("calls", std::int64_t{0});
      u.input_tokens = e.at("input_tokens").get<std::int64_t>();
      u.output_tokens = e.at("output_tokens").get<std::int64_t>();
      out.push_back(std::move(u));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed usage record: ") + e.what());
  }
  return out;
}

std::string_view ToString(Role role) {
  switch (role) {
    case Role::kStudent:
      return "student";
    case Role::kTeacher:
      return "teacher";
    case Role::kGenerator:
      return "generator";
  }
  return "unknown";
}

CompletionResponse BackendRole::Complete(std::string prompt,
                                         PipelineStep step) const {
  if (!backend) {
    throw ConfigError(std::string(ToString(role)) + " role has no backend");
  }
  CompletionRequest req;
  req.model_id = model_id;
  req.prompt_text = std::move(prompt);
  req.temperature = temperature;
  req.max_output_tokens = max_output_tokens;
  CompletionResponse resp = backend->Complete(req);
  if (usage) usage->Record(step, model_id, resp);
  return resp;
}

BackendRole MakeRole(Role role, std::string model_id,
                     std::shared_ptr<CompletionBackend> backend,
                     std::shared_ptr<UsageLedger> usage) {
  BackendRole out;
  out.role = role;
  out.model_id = std::move(model_id);
  out.backend = std::move(backend);
  out.usage = std::move(usage);
  if (role == Role::kGenerator) {
    out.temperature = 1.0;
    out.max_output_tokens = 1024;
  } else {
    out.temperature = 0.0;
    out.max_output_tokens = 5;
  }
  return out;
}

void ModelRouter::Bind(const std::string& model_id,
                       std::shared_ptr<CompletionBackend> backend) {
  routes_[model_id] = std::move(backend);
}

CompletionResponse ModelRouter::Complete(const CompletionRequest& req) {
  const auto it = routes_.find(req.model_id);
  if (it == routes_.end()) {
    throw ConfigError("no backend configured for model '" + req.model_id + "'");
  }
  return it->second->Complete(req);
}

}  // namespace semslice
