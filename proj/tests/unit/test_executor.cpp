#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sleep_backend.hpp"
#include "sqa/error.hpp"
#include "sqa/executor.hpp"
#include "support.hpp"

using nlohmann::json;
using namespace sqa;

namespace {

PlanStep step(int id, const char* tool, json params, std::vector<int> deps = {}) {
  PlanStep s;
  s.id = id;
  s.tool = tool;
  s.subtask = "subtask " + std::to_string(id);
  s.params = std::move(params);
  s.depends_on = std::move(deps);
  return s;
}

const EntityResolver& tiny_resolver() {
  static const EntityResolver r(test::tiny());
  return r;
}

std::vector<std::string> article_ids(const StepResult& r) {
  std::vector<std::string> out;
  for (const auto& row : r.payload.articles->rows) out.push_back(row.id);
  return out;
}

}  // namespace

TEST(Substitute, ScalarListAndExpansion) {
  StepResult facet;
  facet.status = StepStatus::kOk;
  facet.payload.facets = FacetResultSet{};
  for (const char* id : {"A2", "A3"}) {
    FacetRow r;
    r.id = id;
    facet.payload.facets->rows.push_back(r);
  }
  StepResult arts;
  arts.status = StepStatus::kOk;
  arts.payload.articles = ArticleResultSet{};
  for (const char* id : {"W2", "W1"}) {
    ArticleRow r;
    r.id = id;
    arts.payload.articles->rows.push_back(r);
  }
  std::map<int, StepResult> prior{{1, facet}, {2, arts}};
  auto s = step(3, "article_search",
                {{"filters", {{{"type", "AUTHOR"}, {"id", "$step1.entity_ids"}, {"negate", true}},
                              {{"type", "INSTITUTION"}, {"id", "$step1.top_entity_id"}}}},
                 {"article_ids", {"$step2.article_ids", "W9"}},
                 {"note", "$step2.top_article_id"}},
                {1, 2});
  json p = substitute_placeholders(s, prior);
  EXPECT_EQ(p["filters"], json::parse(R"([{"type":"AUTHOR","id":"A2","negate":true},
    {"type":"AUTHOR","id":"A3","negate":true},{"type":"INSTITUTION","id":"A2"}])"));
  EXPECT_EQ(p["article_ids"], json::parse(R"(["W2","W1","W9"])"));
  EXPECT_EQ(p["note"], "W2");
}

TEST(Substitute, EmptyAndUnknownPaths) {
  StepResult empty;
  empty.status = StepStatus::kEmpty;
  empty.payload.articles = ArticleResultSet{};
  StepResult facet;
  facet.status = StepStatus::kOk;
  facet.payload.facets = FacetResultSet{};
  facet.payload.facets->rows.push_back(FacetRow{});
  std::map<int, StepResult> prior{{1, empty}, {2, facet}};
  try {
    substitute_placeholders(step(3, "article_search", {{"article_ids", {"$step1.article_ids"}}}, {1}), prior);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDependency);
  }
  EXPECT_THROW(substitute_placeholders(step(3, "article_search", {{"x", "$step2.top_article_id"}}, {2}), prior),
               InferenceNeeded);
  EXPECT_THROW(substitute_placeholders(step(3, "article_search", {{"x", "$step7.entity_ids"}}, {7}), prior),
               InferenceNeeded);
  json plain = {{"filters", {{{"type", "AUTHOR"}, {"id", "$notaplaceholder"}}}}};
  EXPECT_EQ(substitute_placeholders(step(3, "article_search", plain), prior), plain);
}

TEST(Executor, DependentChainOnTiny) {
  LocalToolBackend backend(test::tiny());
  Executor ex(test::tiny(), tiny_resolver(), backend, nullptr);
  Plan plan;
  plan.steps = {
      step(1, "faceted_article_search", {{"filters", {{{"type", "TOPIC"}, {"id", "T1"}}}}, {"facet", "AUTHOR"}}),
      step(2, "article_search", {{"filters", {{{"type", "AUTHOR"}, {"id", "$step1.entity_ids"}}}}}, {1}),
      step(3, "article_search", {{"filters", {{{"type", "AUTHOR"}, {"id", "$step1.top_entity_id"}}}}}, {1})};
  auto t = ex.execute(plan);
  ASSERT_EQ(t.steps.size(), 3u);
  std::vector<std::string> facet_ids;
  for (const auto& r : t.steps[1].payload.facets->rows) facet_ids.push_back(r.id);
  EXPECT_EQ(facet_ids, (std::vector<std::string>{"A2", "A3", "A1"}));
  EXPECT_EQ(article_ids(t.steps[2]), (std::vector<std::string>{"W2", "W1", "W3", "W4", "W5"}));
  EXPECT_EQ(article_ids(t.steps[3]), (std::vector<std::string>{"W2", "W1"}));
  EXPECT_EQ(t.steps[3].assembled_query, "AUTHOR(A2)");
  EXPECT_EQ(t.ok_steps(), 3u);
  for (const auto& [id, r] : t.steps) {
    for (int d : r.depends_on) EXPECT_GE(r.start_us, t.steps[d].end_us);
  }
}

TEST(Executor, EmptyDependencyFailsDownstream) {
  LocalToolBackend backend(test::tiny());
  Executor ex(test::tiny(), tiny_resolver(), backend, nullptr);
  Plan plan;
  plan.steps = {step(1, "article_search", {{"year_range", {{"min", 1990}, {"max", 1991}}}}),
                step(2, "article_search", {{"article_ids", {"$step1.article_ids"}}}, {1}),
                step(3, "article_search", {{"article_ids", {"$step2.article_ids"}}}, {2}),
                step(4, "article_search", {{"filters", {{{"type", "AUTHOR"}, {"id", "A1"}}}}})};
  auto t = ex.execute(plan);
  EXPECT_EQ(t.steps[1].status, StepStatus::kEmpty);
  EXPECT_EQ(t.steps[2].status, StepStatus::kFailed);
  EXPECT_NE(t.steps[2].error.find("returned no rows"), std::string::npos);
  EXPECT_EQ(t.steps[3].status, StepStatus::kFailed);
  ASSERT_EQ(t.steps[3].cause_chain.size(), 1u);
  EXPECT_EQ(t.steps[3].cause_chain[0], t.steps[2].error);
  EXPECT_EQ(t.steps[4].status, StepStatus::kOk);
}

TEST(Executor, CyclesAndUnknownToolsFail) {
  LocalToolBackend backend(test::tiny());
  Executor ex(test::tiny(), tiny_resolver(), backend, nullptr);
  Plan plan;
  plan.steps = {step(1, "article_search", json::object(), {2}), step(2, "article_search", json::object(), {1}),
                step(3, "article_search", json::object(), {2}), step(4, "web_search", json::object()),
                step(5, "article_search", json::object(), {9})};
  auto t = ex.execute(plan);
  for (int id : {1, 2, 3, 4, 5}) EXPECT_EQ(t.steps[id].status, StepStatus::kFailed) << id;
  EXPECT_NE(t.steps[1].error.find("cycle"), std::string::npos);
  EXPECT_NE(t.steps[5].error.find("does not exist"), std::string::npos);
}

TEST(Executor, AssemblyErrorsAreStepFailures) {
  LocalToolBackend backend(test::tiny());
  Executor ex(test::tiny(), tiny_resolver(), backend, nullptr);
  Plan plan;
  plan.steps = {step(1, "article_search", {{"filters", {{{"type", "TOPIC"}, {"id", "S1"}}}}}),
                step(2, "article_search", {{"x", "$step1.top_venue"}}, {1})};
  auto t = ex.execute(plan);
  EXPECT_EQ(t.steps[1].status, StepStatus::kFailed);
  EXPECT_EQ(t.steps[2].status, StepStatus::kFailed);
}

TEST(Executor, InferenceUsesTheModel) {
  json script = {{"rules",
                  {{{"purpose", "step2.tool_call"},
                    {"responses",
                     {{{"tool_calls",
                        {{{"name", "article_search"},
                          {"arguments", {{"filters", {{{"type", "VENUE"}, {"id", "V1"}}}}}}}}}}}}}}}};
  Gateway g(GatewayConfig{});
  g.set_provider("utility_model", std::make_shared<MockProvider>(script));
  LocalToolBackend backend(test::tiny());
  Executor ex(test::tiny(), tiny_resolver(), backend, &g);
  Plan plan;
  plan.steps = {step(1, "faceted_article_search", {{"facet", "VENUE"}}),
                step(2, "article_search", {{"filters", {{{"type", "VENUE"}, {"id", "$step1.top_venue"}}}}}, {1})};
  CallLog log;
  auto t = ex.execute(plan, &log);
  ASSERT_EQ(t.steps[2].status, StepStatus::kOk) << t.steps[2].error;
  EXPECT_TRUE(t.steps[2].llm_inferred);
  EXPECT_EQ(article_ids(t.steps[2]), (std::vector<std::string>{"W1", "W3"}));
  auto recs = log.records();
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_EQ(recs[0].purpose, "step2.tool_call");
  EXPECT_EQ(t.calls.records().size(), 1u);
}

TEST(Executor, RandomSchedulesRespectDependencies) {
  test::SleepBackend backend(test::tiny(), std::chrono::microseconds(500));
  std::mt19937_64 rng(3);
  Plan plan;
  for (int i = 1; i <= 10; ++i) {
    std::vector<int> deps;
    for (int d = 1; d < i; ++d) {
      if (rng() % 4 == 0) deps.push_back(d);
    }
    plan.steps.push_back(
        step(i, "article_search", {{"filters", {{{"type", "AUTHOR"}, {"id", i % 2 ? "A1" : "A3"}}}}}, deps));
  }
  std::optional<json> first;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ExecutorOptions o;
    o.jitter_seed = seed;
    o.max_concurrency = 4;
    Executor ex(test::tiny(), tiny_resolver(), backend, nullptr, o);
    auto t = ex.execute(plan);
    for (const auto& [id, r] : t.steps) {
      for (int d : r.depends_on) ASSERT_GE(r.start_us, t.steps[d].end_us) << "seed " << seed;
    }
    auto j = t.to_json(false);
    if (!first) first = j;
    EXPECT_EQ(j, *first);
  }
  EXPECT_GE(backend.peak(), 2);
}

TEST(Executor, RejectsZeroConcurrency) {
  LocalToolBackend backend(test::tiny());
  ExecutorOptions o;
  o.max_concurrency = 0;
  EXPECT_THROW(Executor(test::tiny(), tiny_resolver(), backend, nullptr, o), Error);
}

TEST(Baseline, SerializesArgumentsVerbatim) {
  json script = {{"rules",
                  {{{"purpose", "baseline"},
                    {"contains", "Gates"},
                    {"responses",
                     {{{"tool_calls",
                        {{{"name", "article_search"},
                          {"arguments", {{"filters", {{{"type", "AUTHOR"}, {"id", "Bo Chen"}}}}}}}}}}}}},
                   {{"purpose", "baseline"},
                    {"responses",
                     {{{"tool_calls",
                        {{{"name", "article_search"},
                          {"arguments", {{"filters", {{{"type", "AUTHOR"}, {"id", "A2"}}}}}}}}}}}}}}}};
  Gateway g(GatewayConfig{});
  g.set_provider("utility_model", std::make_shared<MockProvider>(script));
  LocalToolBackend backend(test::tiny());
  auto bad = run_baseline("Gates by Bo Chen?", g, backend);
  EXPECT_EQ(bad.mode, "baseline");
  // The name goes into the query unquoted and does not parse.
  EXPECT_EQ(bad.steps[1].status, StepStatus::kFailed);
  EXPECT_EQ(bad.steps[1].error.rfind("query syntax error", 0), 0u) << bad.steps[1].error;
  auto good = run_baseline("Papers by Bo Chen?", g, backend);
  EXPECT_EQ(good.steps[1].status, StepStatus::kOk);
  EXPECT_EQ(article_ids(good.steps[1]), (std::vector<std::string>{"W2", "W1"}));
  EXPECT_THROW(run_baseline(" ", g, backend), Error);
}
