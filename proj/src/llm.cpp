#include "sqa/llm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "sqa/corpus.hpp"
#include "sqa/error.hpp"
#include "sqa/schema.hpp"

namespace sqa {

using nlohmann::json;

namespace {

std::string_view role_name(Role r) {
  switch (r) {
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
    case Role::kTool: return "tool";
  }
  return "user";
}

const std::string& first_user(const ChatRequest& req) {
  static const std::string kEmpty;
  for (const auto& m : req.messages) {
    if (m.role == Role::kUser) return m.content;
  }
  return kEmpty;
}

std::string render_invocations(const Completion& c) {
  json calls = json::array();
  for (const auto& t : c.tool_invocations) calls.push_back({{"name", t.name}, {"arguments", t.arguments}});
  if (calls.empty()) return c.text;
  return calls.dump();
}

}  // namespace

std::int64_t count_tokens(const std::string& text) {
  std::int64_t n = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::string fingerprint(const ChatRequest& req) {
  json j;
  j["system"] = req.system_prompt;
  j["messages"] = json::array();
  for (const auto& m : req.messages) j["messages"].push_back({role_name(m.role), m.content});
  j["tools"] = json::array();
  for (const auto& t : req.tool_schemas) j["tools"].push_back(t.name);
  j["format"] = req.response_format == ResponseFormat::kJsonObject ? "json_object" : "free_text";
  return fnv1a_hex(j.dump());
}

std::optional<json> extract_json_object(const std::string& text) {
  auto whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded() && whole.is_object()) return whole;
  // Scan for a balanced {...} span, respecting strings.
  for (std::size_t start = text.find('{'); start != std::string::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_str = false;
    bool esc = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_str) {
        if (esc) {
          esc = false;
        } else if (c == '\\') {
          esc = true;
        } else if (c == '"') {
          in_str = false;
        }
        continue;
      }
      if (c == '"') in_str = true;
      if (c == '{') ++depth;
      if (c == '}' && --depth == 0) {
        auto j = json::parse(text.substr(start, i - start + 1), nullptr, false);
        if (!j.is_discarded() && j.is_object()) return j;
        break;
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// MockProvider

MockProvider::MockProvider(json script) : script_(std::move(script)) {
  if (!script_.is_object()) throw Error(ErrorCode::kConfig, "mock script must be a JSON object");
}

std::shared_ptr<MockProvider> MockProvider::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open mock script " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kConfig, "mock script " + path.string() + " is not JSON");
  return std::make_shared<MockProvider>(std::move(j));
}

const json* MockProvider::select(const ChatRequest& req, const std::string& profile) const {
  auto round = static_cast<std::size_t>(std::count_if(
      req.messages.begin(), req.messages.end(), [](const Message& m) { return m.role == Role::kAssistant; }));
  auto pick = [&](const json& r) -> const json* {
    if (!r.is_array()) return &r;
    if (r.empty()) return nullptr;
    return &r[std::min(round, r.size() - 1)];
  };

  if (auto fps = script_.find("by_fingerprint"); fps != script_.end()) {
    if (auto hit = fps->find(fingerprint(req)); hit != fps->end()) return pick(*hit);
  }
  if (auto rules = script_.find("rules"); rules != script_.end()) {
    const std::string& user = first_user(req);
    for (const auto& rule : *rules) {
      if (auto p = rule.find("purpose"); p != rule.end()) {
        auto want = p->get<std::string>();
        if (!want.empty() && want.back() == '*') {
          if (req.purpose.rfind(want.substr(0, want.size() - 1), 0) != 0) continue;
        } else if (want != req.purpose) {
          continue;
        }
      }
      if (auto p = rule.find("profile"); p != rule.end() && p->get<std::string>() != profile) continue;
      if (auto c = rule.find("contains"); c != rule.end() &&
                                          user.find(c->get<std::string>()) == std::string::npos) {
        continue;
      }
      if (auto c = rule.find("system_contains");
          c != rule.end() && req.system_prompt.find(c->get<std::string>()) == std::string::npos) {
        continue;
      }
      return pick(rule.at("responses"));
    }
  }
  if (auto d = script_.find("default"); d != script_.end()) return pick(*d);
  return nullptr;
}

ProviderReply MockProvider::complete(const ChatRequest& req, const std::string& profile,
                                     int attempt) {
  const json* r = select(req, profile);
  if (r == nullptr) {
    throw Error(ErrorCode::kProviderUnavailable,
                "mock script has no response for purpose \"" + req.purpose + "\" (fingerprint " +
                    fingerprint(req) + ")");
  }
  if (auto ms = r->value("latency_ms", 0); ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  }
  if (attempt < r->value("fail_first", 0)) {
    throw TransientError("scripted transient failure " + std::to_string(attempt + 1));
  }

  ProviderReply out;
  out.refusal = r->value("refusal", false);
  if (auto t = r->find("text"); t != r->end()) out.text = t->get<std::string>();
  if (auto j = r->find("json"); j != r->end()) out.text = j->dump();
  if (auto calls = r->find("tool_calls"); calls != r->end()) {
    for (const auto& c : *calls) {
      out.tool_invocations.push_back({c.at("name").get<std::string>(), c.value("arguments", json::object())});
    }
  }

  std::int64_t completion = count_tokens(out.text);
  for (const auto& c : out.tool_invocations) completion += count_tokens(c.arguments.dump());
  if (completion > req.max_tokens) {
    std::istringstream words(out.text);
    std::string w;
    std::string cut;
    for (int i = 0; i < req.max_tokens && words >> w; ++i) cut += (i ? " " : "") + w;
    out.text = cut;
    out.truncated = true;
    completion = req.max_tokens;
  }
  std::int64_t prompt = count_tokens(req.system_prompt);
  for (const auto& m : req.messages) prompt += count_tokens(m.content);
  out.usage = Usage{prompt, completion};
  return out;
}

// ---------------------------------------------------------------------------
// Config

GatewayConfig gateway_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "provider config must be a JSON object");
  GatewayConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "_gateway") {
      cfg.max_retries = it->value("retries", cfg.max_retries);
      cfg.backoff_ms = it->value("backoff_ms", cfg.backoff_ms);
      cfg.timeout_ms = it->value("timeout_ms", cfg.timeout_ms);
      continue;
    }
    const json& p = it.value();
    ProfileConfig pc;
    pc.name = it.key();
    pc.kind = p.value("kind", "mock");
    pc.base_url = p.value("base_url", "");
    pc.api_key_env = p.value("api_key_env", "");
    pc.model_id = p.value("model_id", "");
    pc.max_concurrency = p.value("max_concurrency", 4);
    pc.tokens_per_minute = p.value("tokens_per_minute", std::int64_t{0});
    if (pc.kind != "mock" && pc.kind != "http") {
      throw Error(ErrorCode::kConfig, "profile " + pc.name + ": unknown kind \"" + pc.kind + "\"");
    }
    if (pc.max_concurrency < 1) {
      throw Error(ErrorCode::kConfig, "profile " + pc.name + ": max_concurrency must be positive");
    }
    if (p.contains("script")) {
      std::filesystem::path s = p["script"].get<std::string>();
      pc.script = s.is_relative() && !base_dir.empty() ? base_dir / s : s;
    }
    if (pc.kind == "mock" && pc.script.empty()) {
      throw Error(ErrorCode::kConfig, "profile " + pc.name + ": mock profile needs a script");
    }
    if (pc.kind == "http" && pc.base_url.empty()) {
      throw Error(ErrorCode::kConfig, "profile " + pc.name + ": http profile needs base_url");
    }
    cfg.profiles[pc.name] = pc;
  }
  return cfg;
}

GatewayConfig load_gateway_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open provider config " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kConfig, path.string() + " is not valid JSON");
  return gateway_config_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// CallLog

CallLog::CallLog(const CallLog& other) {
  std::lock_guard lock(other.mu_);
  records_ = other.records_;
}

CallLog& CallLog::operator=(const CallLog& other) {
  if (this == &other) return *this;
  std::vector<CallRecord> copy;
  {
    std::lock_guard lock(other.mu_);
    copy = other.records_;
  }
  std::lock_guard lock(mu_);
  records_ = std::move(copy);
  return *this;
}

void CallLog::add(CallRecord r) {
  std::lock_guard lock(mu_);
  records_.push_back(std::move(r));
}

std::vector<CallRecord> CallLog::records() const {
  std::vector<CallRecord> out;
  {
    std::lock_guard lock(mu_);
    out = records_;
  }
  std::stable_sort(out.begin(), out.end(), [](const CallRecord& a, const CallRecord& b) {
    return std::tie(a.purpose, a.profile, a.fingerprint) < std::tie(b.purpose, b.profile, b.fingerprint);
  });
  return out;
}

Usage CallLog::totals() const {
  std::lock_guard lock(mu_);
  Usage u;
  for (const auto& r : records_) {
    u.prompt_tokens += r.usage.prompt_tokens;
    u.completion_tokens += r.usage.completion_tokens;
  }
  return u;
}

void CallLog::merge(const CallLog& other) {
  for (auto& r : other.records()) add(std::move(r));
}

json CallLog::to_json(bool with_timings) const {
  json calls = json::array();
  for (const auto& r : records()) {
    json c{{"purpose", r.purpose},
           {"profile", r.profile},
           {"fingerprint", r.fingerprint},
           {"prompt_tokens", r.usage.prompt_tokens},
           {"completion_tokens", r.usage.completion_tokens},
           {"retries", r.retries},
           {"truncated", r.truncated},
           {"ok", r.ok}};
    if (!r.ok) c["error"] = r.error;
    if (with_timings) c["latency_ms"] = static_cast<std::int64_t>(std::llround(r.latency_ms));
    calls.push_back(std::move(c));
  }
  auto t = totals();
  return {{"calls", calls},
          {"prompt_tokens", t.prompt_tokens},
          {"completion_tokens", t.completion_tokens},
          {"total_tokens", t.prompt_tokens + t.completion_tokens}};
}

// ---------------------------------------------------------------------------
// Rate limiting

void Semaphore::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return n_ > 0; });
  --n_;
}

void Semaphore::release() {
  {
    std::lock_guard lock(mu_);
    ++n_;
  }
  cv_.notify_one();
}

TokenBucket::TokenBucket(std::int64_t per_minute)
    : capacity_(static_cast<double>(per_minute)),
      level_(static_cast<double>(per_minute)),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire(std::int64_t tokens) {
  if (capacity_ <= 0) return;
  double need = std::min(static_cast<double>(tokens), capacity_);
  std::unique_lock lock(mu_);
  while (true) {
    auto now = std::chrono::steady_clock::now();
    double secs = std::chrono::duration<double>(now - last_).count();
    level_ = std::min(capacity_, level_ + secs * capacity_ / 60.0);
    last_ = now;
    if (level_ >= need) {
      level_ -= need;
      return;
    }
    double wait_s = (need - level_) * 60.0 / capacity_;
    lock.unlock();
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
    lock.lock();
  }
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(GatewayConfig config) : config_(std::move(config)) {
  for (const auto& [name, p] : config_.profiles) {
    Slot s;
    if (p.kind == "mock") {
      s.provider = MockProvider::from_file(p.script);
    } else {
      std::string key;
      if (!p.api_key_env.empty()) {
        if (const char* v = std::getenv(p.api_key_env.c_str())) key = v;
      }
      s.provider = std::make_shared<HttpProvider>(p.base_url, p.model_id, key, config_.timeout_ms);
    }
    s.sem = std::make_unique<Semaphore>(p.max_concurrency);
    s.bucket = std::make_unique<TokenBucket>(p.tokens_per_minute);
    slots_.emplace(name, std::move(s));
  }
}

void Gateway::set_provider(const std::string& profile, std::shared_ptr<Provider> provider) {
  auto it = slots_.find(profile);
  if (it == slots_.end()) {
    ProfileConfig pc;
    pc.name = profile;
    config_.profiles[profile] = pc;
    Slot s;
    s.sem = std::make_unique<Semaphore>(pc.max_concurrency);
    s.bucket = std::make_unique<TokenBucket>(0);
    it = slots_.emplace(profile, std::move(s)).first;
  }
  it->second.provider = std::move(provider);
}

bool Gateway::has_profile(const std::string& profile) const { return slots_.count(profile) > 0; }

Gateway::Slot& Gateway::slot(const std::string& profile) {
  auto it = slots_.find(profile);
  if (it == slots_.end()) {
    throw Error(ErrorCode::kProviderUnavailable, "no provider profile \"" + profile + "\"");
  }
  return it->second;
}

Completion Gateway::chat(const std::string& profile, const ChatRequest& req, CallLog* log) {
  if (req.messages.empty()) throw Error(ErrorCode::kInvalidInput, "chat request has no messages");
  if (req.max_tokens < 1) throw Error(ErrorCode::kInvalidInput, "max_tokens must be positive");
  if (req.temperature < 0.0 || req.temperature > 2.0) {
    throw Error(ErrorCode::kInvalidInput, "temperature must lie in [0, 2]");
  }
  Slot& s = slot(profile);
  CallRecord rec;
  rec.purpose = req.purpose;
  rec.profile = profile;
  rec.fingerprint = fingerprint(req);

  std::int64_t estimate = count_tokens(req.system_prompt);
  for (const auto& m : req.messages) estimate += count_tokens(m.content);
  s.bucket->acquire(estimate);

  s.sem->acquire();
  auto start = std::chrono::steady_clock::now();
  ProviderReply reply;
  std::string failure;
  bool got = false;
  try {
    for (int attempt = 0;; ++attempt) {
      try {
        reply = s.provider->complete(req, profile, attempt);
        rec.retries = attempt;
        got = true;
        break;
      } catch (const TransientError& e) {
        spdlog::debug("{}: attempt {} failed: {}", req.purpose, attempt + 1, e.what());
        rec.retries = attempt;
        if (attempt >= config_.max_retries) {
          failure = std::string(e.what());
          break;
        }
        auto backoff = static_cast<std::int64_t>(config_.backoff_ms) << attempt;
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      }
    }
  } catch (const Error& e) {
    failure = e.what();
  } catch (const std::exception& e) {
    failure = e.what();
  }
  s.sem->release();
  rec.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  if (!got) {
    rec.ok = false;
    rec.error = "provider unavailable: " + failure;
    if (log) log->add(rec);
    throw Error(ErrorCode::kProviderUnavailable,
                "profile " + profile + " unavailable after " + std::to_string(rec.retries) +
                    " retries: " + failure);
  }

  Completion c;
  c.text = std::move(reply.text);
  c.tool_invocations = std::move(reply.tool_invocations);
  c.truncated = reply.truncated;
  c.retries = rec.retries;
  c.latency_ms = rec.latency_ms;
  if (reply.usage) {
    c.usage = *reply.usage;
  } else {
    c.usage = {estimate, count_tokens(c.text)};
  }
  rec.usage = c.usage;
  rec.truncated = c.truncated;

  bool empty = c.text.find_first_not_of(" \t\r\n") == std::string::npos && c.tool_invocations.empty();
  if (reply.refusal || empty) {
    rec.ok = false;
    rec.error = reply.refusal ? "refusal" : "empty completion";
    if (log) log->add(rec);
    throw Error(ErrorCode::kEmptyCompletion,
                req.purpose + ": model returned " + (reply.refusal ? "a refusal" : "no output"));
  }
  if (log) log->add(rec);
  return c;
}

ToolInvocation Gateway::tool_call(const std::string& profile, ChatRequest req, CallLog* log) {
  if (req.tool_schemas.empty()) throw Error(ErrorCode::kInvalidInput, "tool_call needs tool schemas");
  for (int round = 0; round < 2; ++round) {
    Completion c = chat(profile, req, log);
    std::vector<std::string> errors;
    bool unknown_tool = false;
    if (c.tool_invocations.size() != 1) {
      unknown_tool = c.tool_invocations.empty();
      errors.push_back("expected exactly one tool invocation, got " +
                       std::to_string(c.tool_invocations.size()));
    } else {
      const ToolInvocation& inv = c.tool_invocations[0];
      auto schema = std::find_if(req.tool_schemas.begin(), req.tool_schemas.end(),
                                 [&](const ToolSchema& t) { return t.name == inv.name; });
      if (schema == req.tool_schemas.end()) {
        unknown_tool = true;
        errors.push_back("unknown tool \"" + inv.name + "\"");
      } else {
        errors = validate_json(inv.arguments, schema->parameters);
        if (errors.empty()) return inv;
      }
    }
    if (round == 1) {
      std::string msg = req.purpose + ": ";
      for (std::size_t i = 0; i < errors.size(); ++i) msg += (i ? "; " : "") + errors[i];
      throw Error(unknown_tool ? ErrorCode::kInvalidTool : ErrorCode::kInvalidArguments, msg);
    }
    std::string feedback = "The tool call was rejected:\n";
    for (const auto& e : errors) feedback += "- " + e + "\n";
    feedback += "Reply with exactly one corrected call to one of the listed tools.";
    req.messages.push_back({Role::kAssistant, render_invocations(c)});
    req.messages.push_back({Role::kUser, feedback});
  }
  throw Error(ErrorCode::kInvalidTool, "unreachable");
}

}  // namespace sqa
