#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sqa/error.hpp"
#include "sqa/visualizer.hpp"

using nlohmann::json;
using namespace sqa;

namespace {

// Step 1: authors with counts and citations; step 2 failed.
RunTrace facet_trace() {
  RunTrace t;
  StepResult s;
  s.step_id = 1;
  s.status = StepStatus::kOk;
  s.payload.facets = FacetResultSet{};
  s.payload.facets->total_matches = 5;
  for (auto [id, n, c] : {std::tuple{"A3", 3, 30}, std::tuple{"A1", 3, 20}, std::tuple{"A2", 2, 40}}) {
    FacetRow r;
    r.id = id;
    r.document_count = static_cast<std::size_t>(n);
    r.total_citations = c;
    s.payload.facets->rows.push_back(r);
  }
  t.steps[1] = s;
  StepResult f;
  f.step_id = 2;
  f.status = StepStatus::kFailed;
  t.steps[2] = f;
  return t;
}

ChartSpec bar(std::vector<double> v) {
  ChartSpec s;
  s.chart_type = "bar";
  s.title = "Docs";
  s.categories = {"A3", "A1", "A2"};
  s.series = {{"documents", std::move(v)}};
  s.source_step_ids = {1};
  return s;
}

Gateway gateway_for(json rules) {
  Gateway g(GatewayConfig{});
  g.set_provider("utility_model", std::make_shared<MockProvider>(json{{"rules", rules}}));
  return g;
}

json spec_json(const ChartSpec& s) { return json(s); }

json rule(const char* purpose, std::vector<json> responses) {
  return {{"purpose", purpose}, {"responses", responses}};
}
json text_reply(const char* t) { return {{"text", t}}; }
json json_reply(json j) { return {{"json", std::move(j)}}; }

}  // namespace

TEST(ChartSpec, JsonRoundTrip) {
  auto s = bar({3, 3, 2});
  s.x_label = "author";
  auto back = chart_spec_from_json(spec_json(s));
  EXPECT_EQ(json(back), spec_json(s));
  EXPECT_THROW(chart_spec_from_json(json{{"chart_type", "bar"}}), Error);
  json bad = spec_json(s);
  bad["series"][0]["values"][0] = "3";
  EXPECT_THROW(chart_spec_from_json(bad), Error);
}

TEST(ChartSpec, PayloadNumbers) {
  auto t = facet_trace();
  EXPECT_EQ(payload_numbers(t.steps[1]), (std::vector<double>{5, 3, 30, 3, 20, 2, 40}));
}

TEST(ChartSpec, Violations) {
  auto t = facet_trace();
  EXPECT_TRUE(validate_chart_spec(bar({3, 3, 2}), t).empty());
  EXPECT_TRUE(validate_chart_spec(bar({30, 20, 40}), t).empty());

  auto v = validate_chart_spec(bar({3, 3}), t);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "series 'documents' has 2 values for 3 categories");

  v = validate_chart_spec(bar({3, 3, 7.5}), t);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], "value 7.5 in series 'documents' is not in the source step data");

  auto s = bar({3, 3, 2});
  s.chart_type = "radar";
  s.title.clear();
  s.source_step_ids = {2, 9};
  v = validate_chart_spec(s, t);
  EXPECT_EQ(v[0], "unknown chart_type 'radar'");
  EXPECT_EQ(v[1], "missing title");
  EXPECT_EQ(v[2], "source step 2 is not an ok step");
  EXPECT_EQ(v[3], "source step 9 is not an ok step");
  EXPECT_EQ(v.size(), 7u);  // plus three untraceable values

  s = bar({3, 3, 2});
  s.series.push_back({"documents", {3, 3, 2}});
  EXPECT_EQ(validate_chart_spec(s, t), std::vector<std::string>{"duplicate series label"});

  s = bar({3, -3, NAN});
  s.chart_type = "pie";
  v = validate_chart_spec(s, t);
  EXPECT_EQ(v, (std::vector<std::string>{"pie values must be non-negative",
                                         "series 'documents' has a non-finite value"}));

  ChartSpec empty;
  empty.chart_type = "line";
  empty.title = "x";
  EXPECT_EQ(validate_chart_spec(empty, t),
            (std::vector<std::string>{"no categories", "no series", "no source steps"}));
}

TEST(Plots, ForcedWhenNothingToPlot) {
  RunTrace t = facet_trace();
  t.steps[1].payload.facets->rows.resize(1);
  auto g = gateway_for(json::array());
  CallLog log;
  auto d = decide_plots("q", "a", t, g, &log);
  EXPECT_TRUE(d.forced);
  EXPECT_FALSE(d.wanted);
  EXPECT_EQ(log.records().size(), 0u);
}

TEST(Plots, DecisionRepairAndGiveUp) {
  json decision = {{"wanted", true}, {"chart_types", {"bar", "radar"}}, {"rationale", "r"}};
  auto g = gateway_for(json::array({rule("plot_decision", {text_reply("sure, a chart"), json_reply(decision)})}));
  CallLog log;
  auto d = decide_plots("q", "a", facet_trace(), g, &log);
  EXPECT_TRUE(d.wanted);
  EXPECT_EQ(d.chart_types, std::vector<std::string>{"bar"});
  EXPECT_EQ(log.records().size(), 2u);

  auto g2 = gateway_for(json::array({rule("plot_decision", {json_reply({{"wanted", "yes"}})})}));
  std::vector<std::string> warnings;
  auto d2 = decide_plots("q", "a", facet_trace(), g2, nullptr, &warnings);
  EXPECT_FALSE(d2.wanted);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Charts, RepairKeepsValidSpecs) {
  json good = spec_json(bar({3, 3, 2}));
  json wrong = spec_json(bar({3, 3, 99}));
  wrong["title"] = "Cites";
  json fixed = spec_json(bar({30, 20, 40}));
  fixed["title"] = "Cites";
  auto g = gateway_for(json::array({rule("charts", {json_reply({{"charts", {good, wrong}}}),
                                                     json_reply({{"charts", json::array({fixed})}})})}));
  PlotDecision d;
  d.wanted = true;
  CallLog log;
  auto run = generate_charts(d, "q", facet_trace(), g, &log);
  EXPECT_EQ(run.model_calls, 2);
  ASSERT_EQ(run.charts.size(), 2u);
  EXPECT_EQ(run.charts[1].title, "Cites");
  EXPECT_TRUE(run.warnings.empty());
}

TEST(Charts, DropsAfterThreeCalls) {
  json wrong = spec_json(bar({1, 2, 9999}));
  auto g = gateway_for(
      json::array({rule("charts", {text_reply("no json"), json_reply({{"charts", json::array({wrong})}})})}));
  PlotDecision d;
  d.wanted = true;
  CallLog log;
  auto run = generate_charts(d, "q", facet_trace(), g, &log);
  EXPECT_EQ(run.model_calls, kMaxChartCalls);
  EXPECT_EQ(log.records().size(), static_cast<std::size_t>(kMaxChartCalls));
  EXPECT_TRUE(run.charts.empty());
  ASSERT_EQ(run.warnings.size(), 2u);
  EXPECT_EQ(run.warnings[0], "chart 'Docs' dropped: value 1 in series 'documents' is not in the source step data");

  d.wanted = false;
  EXPECT_EQ(generate_charts(d, "q", facet_trace(), g).model_calls, 0);
}

TEST(Charts, SvgRendering) {
  auto s = bar({3, 3, 2});
  s.title = "A < B & \"C\"";
  auto svg = render_svg(s);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("A &lt; B &amp; &quot;C&quot;"), std::string::npos);
  EXPECT_EQ(svg.substr(svg.size() - 7), "</svg>\n");
  std::size_t rects = 0;
  for (auto p = svg.find("<rect"); p != std::string::npos; p = svg.find("<rect", p + 1)) ++rects;
  EXPECT_EQ(rects, 4u);  // background plus three bars

  s.chart_type = "pie";
  svg = render_svg(s);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), 'Z'), 3);
  s.series[0].values = {5, 0, 0};
  EXPECT_NE(render_svg(s).find("<circle"), std::string::npos);
  s.chart_type = "line";
  EXPECT_NE(render_svg(s).find("<polyline"), std::string::npos);
  EXPECT_EQ(render_svg(s), render_svg(s));
}
