#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sqa {

enum class Role { kUser, kAssistant, kTool };

struct Message {
  Role role = Role::kUser;
  std::string content;
};

enum class ResponseFormat { kFreeText, kJsonObject };

struct ToolSchema {
  std::string name;
  std::string description;
  nlohmann::json parameters;  // JSON Schema subset, see schema.hpp
};

struct ChatRequest {
  /// Routing/logging label such as "hlpm" or "step2.tool_call". Not part of
  /// the fingerprint.
  std::string purpose;
  std::string system_prompt;
  std::vector<Message> messages;
  std::vector<ToolSchema> tool_schemas;
  ResponseFormat response_format = ResponseFormat::kFreeText;
  double temperature = 0.0;
  int max_tokens = 2048;
};

/// Stable hash of system prompt, messages, tool names and response format.
std::string fingerprint(const ChatRequest& req);

struct ToolInvocation {
  std::string name;
  nlohmann::json arguments;
};

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct Completion {
  std::string text;
  std::vector<ToolInvocation> tool_invocations;
  Usage usage;
  double latency_ms = 0.0;
  int retries = 0;
  bool truncated = false;
};

/// Raw provider output before gateway bookkeeping.
struct ProviderReply {
  std::string text;
  std::vector<ToolInvocation> tool_invocations;
  std::optional<Usage> usage;
  bool refusal = false;
  bool truncated = false;
};

/// Thrown by providers for failures worth retrying (transport errors,
/// rate limiting, 5xx).
class TransientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Provider {
 public:
  virtual ~Provider() = default;
  /// `attempt` counts from 0 and increases on every retry of one request.
  virtual ProviderReply complete(const ChatRequest& req, const std::string& profile,
                                 int attempt) = 0;
};

/// Deterministic scripted provider.
///
/// Script shape:
///   { "by_fingerprint": { "<fp>": <response> | [<response>...] },
///     "rules": [ { "purpose": "...", "profile": "...", "contains": "...",
///                  "responses": [<response>...] } ],
///     "default": <response> }
/// A response is { "text" | "json" | "tool_calls" | "refusal",
///                 "fail_first": n, "latency_ms": n }.
/// Rule fields are optional filters; `purpose` matches exactly or as a
/// prefix ending in '*', `contains` is a substring of the first user
/// message. The response index is the number of assistant messages already
/// in the request (repair rounds), clamped to the last response, so replies
/// depend only on the request.
class MockProvider : public Provider {
 public:
  explicit MockProvider(nlohmann::json script);
  static std::shared_ptr<MockProvider> from_file(const std::filesystem::path& path);

  ProviderReply complete(const ChatRequest& req, const std::string& profile,
                         int attempt) override;

 private:
  const nlohmann::json* select(const ChatRequest& req, const std::string& profile) const;

  nlohmann::json script_;
};

/// OpenAI-compatible chat completions endpoint.
class HttpProvider : public Provider {
 public:
  HttpProvider(std::string base_url, std::string model_id, std::string api_key, int timeout_ms);
  ProviderReply complete(const ChatRequest& req, const std::string& profile,
                         int attempt) override;

 private:
  std::string origin_;
  std::string path_prefix_;
  std::string model_id_;
  std::string api_key_;
  int timeout_ms_;
};

struct ProfileConfig {
  std::string name;
  std::string kind = "mock";  // mock | http
  std::string base_url;
  std::string api_key_env;
  std::string model_id;
  int max_concurrency = 4;
  std::int64_t tokens_per_minute = 0;  // 0 disables the budget
  std::filesystem::path script;        // mock only
};

struct GatewayConfig {
  std::map<std::string, ProfileConfig> profiles;
  int max_retries = 3;
  int backoff_ms = 200;
  int timeout_ms = 30000;
};

/// {profile -> {kind, base_url, api_key_env, model_id, max_concurrency,
/// tokens_per_minute, script}} plus optional top-level "retries",
/// "backoff_ms", "timeout_ms" under "_gateway". Relative script paths are
/// resolved against `base_dir`.
GatewayConfig gateway_config_from_json(const nlohmann::json& j,
                                       const std::filesystem::path& base_dir = {});
GatewayConfig load_gateway_config(const std::filesystem::path& path);

struct CallRecord {
  std::string purpose;
  std::string profile;
  std::string fingerprint;
  Usage usage;
  double latency_ms = 0.0;
  int retries = 0;
  bool truncated = false;
  bool ok = true;
  std::string error;
};

/// Per-run usage ledger; safe to append from concurrent steps.
class CallLog {
 public:
  CallLog() = default;
  CallLog(const CallLog& other);
  CallLog& operator=(const CallLog& other);

  void add(CallRecord r);
  /// Records sorted by (purpose, profile, fingerprint) so logs from
  /// concurrent runs compare equal.
  std::vector<CallRecord> records() const;
  Usage totals() const;
  void merge(const CallLog& other);
  nlohmann::json to_json(bool with_timings = true) const;

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> records_;
};

class Semaphore {
 public:
  explicit Semaphore(int n) : n_(n) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int n_;
};

/// Token bucket refilled continuously at `per_minute` tokens per minute.
class TokenBucket {
 public:
  explicit TokenBucket(std::int64_t per_minute);
  void acquire(std::int64_t tokens);

 private:
  std::mutex mu_;
  double capacity_;
  double level_;
  std::chrono::steady_clock::time_point last_;
};

class Gateway {
 public:
  explicit Gateway(GatewayConfig config);

  /// Replaces the provider behind `profile`; used by tests.
  void set_provider(const std::string& profile, std::shared_ptr<Provider> provider);
  bool has_profile(const std::string& profile) const;
  const GatewayConfig& config() const { return config_; }

  /// Retries transient failures with exponential backoff. Throws
  /// Error(kProviderUnavailable) when retries are exhausted and
  /// Error(kEmptyCompletion) on refusal or empty output.
  Completion chat(const std::string& profile, const ChatRequest& req, CallLog* log = nullptr);

  /// Exactly one validated invocation. One repair round with the validation
  /// errors appended; then Error(kInvalidTool) or Error(kInvalidArguments).
  ToolInvocation tool_call(const std::string& profile, ChatRequest req, CallLog* log = nullptr);

 private:
  struct Slot {
    std::shared_ptr<Provider> provider;
    std::unique_ptr<Semaphore> sem;
    std::unique_ptr<TokenBucket> bucket;
  };
  Slot& slot(const std::string& profile);

  GatewayConfig config_;
  std::map<std::string, Slot> slots_;
};

/// First JSON object in `text`, tolerating code fences and leading prose.
std::optional<nlohmann::json> extract_json_object(const std::string& text);

std::int64_t count_tokens(const std::string& text);

}  // namespace sqa
