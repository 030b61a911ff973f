#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "plan_fuzz.hpp"
#include "sqa/error.hpp"
#include "sqa/planner.hpp"
#include "support.hpp"

using nlohmann::json;
using namespace sqa;

namespace {

PlanStep step(int id, const char* tool, json params, std::vector<int> deps = {}) {
  PlanStep s;
  s.id = id;
  s.tool = tool;
  s.subtask = "s";
  s.params = std::move(params);
  s.depends_on = std::move(deps);
  return s;
}

std::set<std::string> rules_of(const ValidationReport& r) {
  std::set<std::string> out;
  for (const auto& v : r.violations) out.insert(v.rule);
  return out;
}

Gateway scripted(json rules) {
  Gateway g(GatewayConfig{});
  g.set_provider("utility_model", std::make_shared<MockProvider>(json{{"rules", rules}}));
  g.set_provider("planner_model", std::make_shared<MockProvider>(json{{"rules", rules}}));
  return g;
}

json author(const std::string& id) { return {{"type", "AUTHOR"}, {"id", id}}; }

}  // namespace

TEST(Validate, ValidTwoStepPlan) {
  Plan p;
  p.steps = {step(1, "faceted_article_search", {{"filters", {author("A_PARK_CY")}}, {"facet", "AUTHOR"}}),
             step(2, "article_search", {{"filters", {author("$step1.top_entity_id")}}}, {1})};
  auto r = validate_plan(p, &test::fixture());
  EXPECT_TRUE(r.ok()) << json(r).dump();
}

TEST(Validate, EachRule) {
  Plan p;
  p.steps = {step(1, "article_search", {{"filters", {author("$step2.top_entity_id")}}}, {2}),
             step(2, "article_search", {{"limit", 0}}, {1}),
             step(2, "web_search", json::object(), {2, 9}),
             step(5, "article_search", {{"filters", {author("$step.x")}}}),
             step(6, "faceted_article_search", {{"filters", {author("$step1.entity_ids")}}})};
  auto got = rules_of(validate_plan(p));
  EXPECT_EQ(got, (std::set<std::string>{rules::kForwardDependency, rules::kCycle, rules::kParamSchema,
                                        rules::kDuplicateId, rules::kStepId, rules::kUnknownTool,
                                        rules::kSelfDependency, rules::kDanglingDependency,
                                        rules::kMalformedPlaceholder, rules::kPlaceholderDependency}));
}

TEST(Validate, EntityChecksNeedCorpus) {
  Plan p;
  p.steps = {step(1, "article_search",
                  {{"filters", {{{"type", "TOPIC"}, {"id", "SA_NEURO"}}, author("A_NOBODY")}}})};
  EXPECT_TRUE(validate_plan(p).ok());
  auto r = validate_plan(p, &test::fixture());
  EXPECT_EQ(rules_of(r), (std::set<std::string>{rules::kEntityTypeConflation, rules::kUnknownEntity}));
}

TEST(Validate, EmptyPlanWarns) {
  auto r = validate_plan(Plan{});
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Validate, FuzzAgreesWithIndependentChecker) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 1000; ++i) {
    Plan p = test::fuzz_plan(rng);
    ValidationReport r;
    ASSERT_NO_THROW(r = validate_plan(p)) << to_json(p).dump();
    ASSERT_EQ(test::findings(r), test::check_plan(p)) << to_json(p).dump();
  }
}

TEST(PlanJson, RoundTripAndErrors) {
  Plan p;
  p.steps = {step(1, "article_search", {{"limit", 2}}), step(2, "article_search", json::object(), {1})};
  auto back = plan_from_json(to_json(p));
  ASSERT_EQ(back.steps.size(), 2u);
  EXPECT_EQ(back.steps[1].depends_on, std::vector<int>{1});
  EXPECT_THROW(plan_from_json(json{{"steps", 3}}), Error);
  EXPECT_THROW(plan_from_json(json{{"steps", {{{"tool", "article_search"}}}}}), Error);
}

TEST(Outline, LeakDetection) {
  EXPECT_TRUE(outline_line_leaks("call faceted_article_search on it"));
  EXPECT_TRUE(outline_line_leaks("use $step1 results"));
  EXPECT_TRUE(outline_line_leaks("set \"facet\": AUTHOR"));
  EXPECT_TRUE(outline_line_leaks("narrow by year_range"));
  EXPECT_FALSE(outline_line_leaks("find the papers of the author"));
}

TEST(Hlpm, TagsResolveWithoutModel) {
  const std::string q = "Marco D. Santambrogio and Durelli, G. have which primary affiliations?";
  auto g = scripted({{{"purpose", "hlpm"},
                      {"responses",
                       {{{"json",
                          {{"tags", {{{"text", "Marco D. Santambrogio"}, {"type", "AUTHOR"}},
                                     {{"text", "durelli, g."}, {"type", "AUTHOR"}},
                                     {{"text", "Santambrogio"}, {"type", "AUTHOR"}},
                                     {{"text", "Mars"}, {"type", "AUTHOR"}},
                                     {{"text", "x"}, {"type", "PAPER"}}}},
                           {"outline", {"find affiliations"}}}}}}}}});
  CallLog log;
  auto h = hlpm(q, g, test::fixture_resolver(), &log);
  EXPECT_EQ(log.records().size(), 1u);
  ASSERT_EQ(h.tagged.tags.size(), 2u);
  EXPECT_EQ(h.tagged.tags[1].text, "Durelli, G.");
  EXPECT_EQ(q.substr(h.tagged.tags[1].begin, h.tagged.tags[1].end - h.tagged.tags[1].begin), "Durelli, G.");
  ASSERT_EQ(h.resolutions.size(), 2u);
  EXPECT_EQ(h.resolutions[0].entity->id, "A_SANTAMBROGIO_MD");
  EXPECT_EQ(h.resolutions[1].entity->id, "A_DURELLI_GC");
  EXPECT_EQ(h.tagged.warnings.size(), 3u);  // overlap, not found, unsupported type
}

TEST(Hlpm, AmbiguityWarningAndRepair) {
  auto g = scripted({{{"purpose", "hlpm"},
                      {"responses",
                       {{{"json", {{"tags", json::array()}, {"outline", {"use article_search"}}}}},
                        {{"json", {{"tags", {{{"text", "Wei Zhang"}, {"type", "AUTHOR"}}}}, {"outline", {"count"}}}}}}}}});
  CallLog log;
  auto h = hlpm("What did Wei Zhang publish?", g, test::fixture_resolver(), &log);
  EXPECT_EQ(log.records().size(), 2u);
  ASSERT_EQ(h.resolutions.size(), 1u);
  EXPECT_FALSE(h.resolutions[0].alternatives.empty());
  ASSERT_FALSE(h.tagged.warnings.empty());
  EXPECT_NE(h.tagged.warnings[0].find("ambiguous"), std::string::npos);
}

TEST(Hlpm, FailsAfterRepair) {
  auto g = scripted({{{"purpose", "hlpm"}, {"responses", {{{"text", "no idea"}}}}}});
  try {
    hlpm("Who?", g, test::fixture_resolver());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPlannerParse);
  }
  EXPECT_THROW(hlpm("  ", g, test::fixture_resolver()), Error);
}

TEST(Dpm, RepairsConflationThenAccepts) {
  HlpmResult h;
  h.tagged.question = "Neuroscience venues?";
  json bad = {{"steps", {{{"id", 1}, {"tool", "faceted_article_search"}, {"subtask", "x"}, {"depends_on", json::array()},
                          {"params", {{"filters", {{{"type", "TOPIC"}, {"id", "SA_NEURO"}}}}, {"facet", "VENUE"}}}}}}};
  json good = bad;
  good["steps"][0]["params"]["filters"][0]["type"] = "SUBJECT_AREA";
  auto g = scripted({{{"purpose", "dpm"}, {"responses", {{{"json", bad}}, {{"json", good}}}}}});
  CallLog log;
  auto plan = dpm(h, g, test::fixture(), &log);
  EXPECT_EQ(plan.steps.size(), 1u);
  EXPECT_EQ(log.records().size(), 2u);

  auto g2 = scripted({{{"purpose", "dpm"}, {"responses", {{{"json", bad}}}}}});
  try {
    dpm(h, g2, test::fixture());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidPlan);
    EXPECT_NE(std::string(e.what()).find("entity_type_conflation"), std::string::npos);
  }
}
