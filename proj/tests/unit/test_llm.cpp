#include <atomic>
#include <chrono>
#include <thread>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sqa/error.hpp"
#include "sqa/llm.hpp"
#include "sqa/prompts.hpp"
#include "support.hpp"

using nlohmann::json;
using namespace sqa;

namespace {

ChatRequest req(const std::string& purpose, const std::string& user) {
  ChatRequest r;
  r.purpose = purpose;
  r.system_prompt = "sys";
  r.messages.push_back({Role::kUser, user});
  return r;
}

Gateway mock_gateway(json script, int retries = 2) {
  GatewayConfig cfg;
  cfg.max_retries = retries;
  cfg.backoff_ms = 1;
  Gateway g(cfg);
  g.set_provider("p", std::make_shared<MockProvider>(std::move(script)));
  return g;
}

// Counts concurrent calls and sleeps inside complete().
class SlowProvider : public Provider {
 public:
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  ProviderReply complete(const ChatRequest&, const std::string&, int) override {
    int now = ++active;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {}
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --active;
    return {"ok", {}, Usage{1, 1}, false, false};
  }
};

}  // namespace

TEST(Mock, RuleMatchingOrder) {
  json script = {{"rules",
                  {{{"purpose", "a"}, {"contains", "alpha"}, {"responses", {{{"text", "A1"}}}}},
                   {{"purpose", "a"}, {"responses", {{{"text", "A2"}}}}},
                   {{"purpose", "judge.*"}, {"profile", "p"}, {"responses", {{{"json", {{"score", 3}}}}}}},
                   {{"system_contains", "special"}, {"responses", {{{"text", "S"}}}}}}},
                 {"default", {{"text", "D"}}}};
  auto g = mock_gateway(script);
  EXPECT_EQ(g.chat("p", req("a", "alpha beta")).text, "A1");
  EXPECT_EQ(g.chat("p", req("a", "gamma")).text, "A2");
  EXPECT_EQ(g.chat("p", req("judge.Coverage", "x")).text, "{\"score\":3}");
  auto s = req("zzz", "x");
  s.system_prompt = "a special prompt";
  EXPECT_EQ(g.chat("p", s).text, "S");
  EXPECT_EQ(g.chat("p", req("zzz", "x")).text, "D");
}

TEST(Mock, ResponseIndexFollowsAssistantTurns) {
  json script = {{"rules", {{{"responses", {{{"text", "first"}}, {{"text", "second"}}}}}}}};
  auto g = mock_gateway(script);
  auto r = req("x", "q");
  EXPECT_EQ(g.chat("p", r).text, "first");
  r.messages.push_back({Role::kAssistant, "first"});
  r.messages.push_back({Role::kUser, "again"});
  EXPECT_EQ(g.chat("p", r).text, "second");
  r.messages.push_back({Role::kAssistant, "second"});
  r.messages.push_back({Role::kUser, "again"});
  EXPECT_EQ(g.chat("p", r).text, "second");
}

TEST(Mock, ByFingerprint) {
  auto r = req("x", "exact");
  json script = {{"by_fingerprint", {{fingerprint(r), {{"text", "hit"}}}}}, {"default", {{"text", "miss"}}}};
  auto g = mock_gateway(script);
  EXPECT_EQ(g.chat("p", r).text, "hit");
  EXPECT_EQ(g.chat("p", req("x", "other")).text, "miss");
}

TEST(Fingerprint, IgnoresPurpose) {
  EXPECT_EQ(fingerprint(req("a", "q")), fingerprint(req("b", "q")));
  EXPECT_NE(fingerprint(req("a", "q")), fingerprint(req("a", "q2")));
}

TEST(Gateway, RetriesTransientFailures) {
  auto g = mock_gateway({{"default", {{"text", "ok"}, {"fail_first", 2}}}}, 3);
  CallLog log;
  auto c = g.chat("p", req("x", "q"), &log);
  EXPECT_EQ(c.text, "ok");
  EXPECT_EQ(c.retries, 2);
  ASSERT_EQ(log.records().size(), 1u);
  EXPECT_EQ(log.records()[0].retries, 2);
}

TEST(Gateway, ExhaustedRetriesAreUnavailable) {
  auto g = mock_gateway({{"default", {{"text", "ok"}, {"fail_first", 5}}}}, 2);
  CallLog log;
  try {
    g.chat("p", req("x", "q"), &log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
  }
  ASSERT_EQ(log.records().size(), 1u);
  EXPECT_FALSE(log.records()[0].ok);
}

TEST(Gateway, RefusalAndEmpty) {
  auto g = mock_gateway({{"rules", {{{"purpose", "r"}, {"responses", {{{"refusal", true}, {"text", "no"}}}}}}},
                         {"default", {{"text", "  "}}}});
  for (const char* p : {"r", "e"}) {
    try {
      g.chat("p", req(p, "q"));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kEmptyCompletion);
    }
  }
}

TEST(Gateway, InvalidRequests) {
  auto g = mock_gateway({{"default", {{"text", "ok"}}}});
  ChatRequest empty;
  EXPECT_THROW(g.chat("p", empty), Error);
  auto hot = req("x", "q");
  hot.temperature = 3;
  EXPECT_THROW(g.chat("p", hot), Error);
  try {
    g.chat("missing", req("x", "q"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
  }
}

TEST(Gateway, MaxTokensTruncates) {
  auto g = mock_gateway({{"default", {{"text", "one two three four five"}}}});
  auto r = req("x", "q");
  r.max_tokens = 3;
  auto c = g.chat("p", r);
  EXPECT_EQ(c.text, "one two three");
  EXPECT_TRUE(c.truncated);
  EXPECT_EQ(c.usage.completion_tokens, 3);
}

TEST(Gateway, ToolCallRepairRound) {
  json bad = {{"name", "article_search"}, {"arguments", {{"limit", 0}}}};
  json good = {{"name", "article_search"}, {"arguments", {{"limit", 3}}}};
  auto g = mock_gateway({{"default", json::array({{{"tool_calls", {bad}}}, {{"tool_calls", {good}}}})}});
  auto r = req("tc", "q");
  r.tool_schemas = prompts::planning_tools();
  CallLog log;
  auto inv = g.tool_call("p", r, &log);
  EXPECT_EQ(inv.arguments["limit"], 3);
  EXPECT_EQ(log.records().size(), 2u);
}

TEST(Gateway, ToolCallFailures) {
  auto r = req("tc", "q");
  r.tool_schemas = prompts::planning_tools();
  json unknown = {{"name", "drop_tables"}, {"arguments", json::object()}};
  auto g1 = mock_gateway({{"default", {{"tool_calls", {unknown}}}}});
  try {
    g1.tool_call("p", r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidTool);
  }
  json bad = {{"name", "faceted_article_search"}, {"arguments", json::object()}};
  auto g2 = mock_gateway({{"default", {{"tool_calls", {bad}}}}});
  try {
    g2.tool_call("p", r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArguments);
    EXPECT_NE(std::string(e.what()).find("missing required property \"facet\""), std::string::npos);
  }
  auto g3 = mock_gateway({{"default", {{"text", "I would search for it."}}}});
  EXPECT_THROW(g3.tool_call("p", r), Error);
}

TEST(Gateway, SemaphoreBoundsConcurrency) {
  GatewayConfig cfg;
  ProfileConfig pc;
  pc.name = "p";
  pc.max_concurrency = 2;
  pc.script = test::minisuite_dir() / "mock_script.json";
  cfg.profiles["p"] = pc;
  Gateway g(cfg);
  auto slow = std::make_shared<SlowProvider>();
  g.set_provider("p", slow);
  std::vector<std::thread> ts;
  for (int i = 0; i < 8; ++i) ts.emplace_back([&] { g.chat("p", req("x", "q")); });
  for (auto& t : ts) t.join();
  EXPECT_EQ(slow->peak.load(), 2);
}

TEST(TokenBucket, WaitsForRefill) {
  TokenBucket b(6000);  // 100 per second
  auto t0 = std::chrono::steady_clock::now();
  b.acquire(6000);
  b.acquire(10);
  auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GE(ms, 80.0);
  TokenBucket off(0);
  off.acquire(1'000'000);
}

TEST(CallLogTest, SortedTotals) {
  CallLog log;
  CallRecord a;
  a.purpose = "b";
  a.usage = {3, 4};
  CallRecord b;
  b.purpose = "a";
  b.usage = {1, 2};
  log.add(a);
  log.add(b);
  EXPECT_EQ(log.records()[0].purpose, "a");
  EXPECT_EQ(log.totals().prompt_tokens, 4);
  auto j = log.to_json(false);
  EXPECT_EQ(j["total_tokens"], 10);
  EXPECT_FALSE(j["calls"][0].contains("latency_ms"));
}

TEST(Json, ExtractObject) {
  EXPECT_EQ(extract_json_object("{\"a\":1}")->at("a"), 1);
  EXPECT_EQ(extract_json_object("Sure!\n```json\n{\"a\": \"}\"}\n```")->at("a"), "}");
  EXPECT_EQ(extract_json_object("x {bad} then {\"b\":2}")->at("b"), 2);
  EXPECT_FALSE(extract_json_object("[1,2]"));
  EXPECT_FALSE(extract_json_object("nothing"));
  EXPECT_EQ(count_tokens("  a bb\tccc\n"), 3);
}

TEST(Config, ParsesAndRejects) {
  auto cfg = gateway_config_from_json(
      json{{"_gateway", {{"retries", 5}}}, {"u", {{"kind", "mock"}, {"script", "s.json"}}}}, "/base");
  EXPECT_EQ(cfg.max_retries, 5);
  EXPECT_EQ(cfg.profiles.at("u").script, std::filesystem::path("/base/s.json"));
  EXPECT_THROW(gateway_config_from_json(json{{"u", {{"kind", "grpc"}}}}), Error);
  EXPECT_THROW(gateway_config_from_json(json{{"u", {{"kind", "mock"}}}}), Error);
  EXPECT_THROW(gateway_config_from_json(json{{"u", {{"kind", "http"}}}}), Error);
  EXPECT_THROW(gateway_config_from_json(json{{"u", {{"kind", "mock"}, {"script", "s"}, {"max_concurrency", 0}}}}),
               Error);
  auto mini = load_gateway_config(test::minisuite_dir() / "providers.json");
  EXPECT_TRUE(mini.profiles.count("judge_d"));
  EXPECT_THROW(load_gateway_config("/nonexistent.json"), Error);
}
