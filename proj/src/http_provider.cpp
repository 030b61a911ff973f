#include <regex>

#include <httplib.h>

#include "sqa/error.hpp"
#include "sqa/llm.hpp"

namespace sqa {

using nlohmann::json;

HttpProvider::HttpProvider(std::string base_url, std::string model_id, std::string api_key,
                           int timeout_ms)
    : model_id_(std::move(model_id)), api_key_(std::move(api_key)), timeout_ms_(timeout_ms) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(base_url, m, re)) {
    throw Error(ErrorCode::kConfig, "bad base_url \"" + base_url + "\"");
  }
  origin_ = m[1].str();
  path_prefix_ = m[2].str();
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (origin_.rfind("https://", 0) == 0) {
    throw Error(ErrorCode::kConfig, "https base_url needs a build with OpenSSL");
  }
#endif
}

ProviderReply HttpProvider::complete(const ChatRequest& req, const std::string& /*profile*/,
                                     int /*attempt*/) {
  json body;
  body["model"] = model_id_;
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_tokens;
  json msgs = json::array();
  msgs.push_back({{"role", "system"}, {"content", req.system_prompt}});
  for (const auto& m : req.messages) {
    switch (m.role) {
      case Role::kUser: msgs.push_back({{"role", "user"}, {"content", m.content}}); break;
      case Role::kAssistant: msgs.push_back({{"role", "assistant"}, {"content", m.content}}); break;
      case Role::kTool:
        msgs.push_back({{"role", "user"}, {"content", "Tool result:\n" + m.content}});
        break;
    }
  }
  body["messages"] = std::move(msgs);
  if (!req.tool_schemas.empty()) {
    json tools = json::array();
    for (const auto& t : req.tool_schemas) {
      tools.push_back({{"type", "function"},
                       {"function",
                        {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
    }
    body["tools"] = std::move(tools);
  }
  if (req.response_format == ResponseFormat::kJsonObject) {
    body["response_format"] = {{"type", "json_object"}};
  }

  httplib::Client cli(origin_);
  auto secs = timeout_ms_ / 1000;
  auto usecs = (timeout_ms_ % 1000) * 1000;
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = cli.Post(path_prefix_ + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw TransientError("transport error: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) {
    throw TransientError("HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kProviderUnavailable,
                "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  auto j = json::parse(res->body, nullptr, false);
  if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
    throw TransientError("malformed completion body");
  }
  const json& choice = j["choices"][0];
  const json& msg = choice.value("message", json::object());

  ProviderReply out;
  if (msg.contains("content") && msg["content"].is_string()) out.text = msg["content"].get<std::string>();
  if (msg.contains("refusal") && !msg["refusal"].is_null()) out.refusal = true;
  if (msg.contains("tool_calls") && msg["tool_calls"].is_array()) {
    for (const auto& tc : msg["tool_calls"]) {
      const json& fn = tc.value("function", json::object());
      ToolInvocation inv;
      inv.name = fn.value("name", "");
      auto args = fn.value("arguments", json("{}"));
      if (args.is_string()) {
        auto parsed = json::parse(args.get<std::string>(), nullptr, false);
        inv.arguments = parsed.is_discarded() ? args : parsed;
      } else {
        inv.arguments = args;
      }
      out.tool_invocations.push_back(std::move(inv));
    }
  }
  out.truncated = choice.value("finish_reason", "") == "length";
  if (j.contains("usage")) {
    out.usage = Usage{j["usage"].value("prompt_tokens", std::int64_t{0}),
                      j["usage"].value("completion_tokens", std::int64_t{0})};
  }
  return out;
}

}  // namespace sqa
