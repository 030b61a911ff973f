#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sqa/error.hpp"
#include "sqa/eval.hpp"
#include "stats_oracle.hpp"
#include "support.hpp"

using nlohmann::json;
using namespace sqa;

TEST(Kappa, MatchesDoubleSum) {
  std::mt19937_64 rng(5);
  for (int it = 0; it < 300; ++it) {
    int k = 2 + static_cast<int>(rng() % 5);
    std::size_t n = 1 + rng() % 40;
    std::vector<int> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = 1 + static_cast<int>(rng() % static_cast<unsigned>(k));
      b[i] = rng() % 3 == 0 ? a[i] : 1 + static_cast<int>(rng() % static_cast<unsigned>(k));
    }
    auto got = weighted_kappa(a, b, k);
    auto want = test::kappa_double_sum(a, b, k);
    ASSERT_EQ(got.kappa.has_value(), want.has_value());
    if (want) {
      ASSERT_NEAR(*got.kappa, *want, 1e-12);
    }
  }
}

TEST(Kappa, HandCases) {
  EXPECT_EQ(*weighted_kappa({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, 5).kappa, 1.0);
  EXPECT_EQ(*weighted_kappa({1, 1, 2, 2}, {2, 2, 1, 1}, 2).kappa, -1.0);
  // Constant raters on different levels: observed equals expected.
  auto r = weighted_kappa({3, 3}, {4, 4}, 5);
  EXPECT_EQ(*r.kappa, 0.0);
  EXPECT_EQ(r.observed, r.expected);
  EXPECT_EQ(*weighted_kappa({2, 2}, {2, 2}, 5).kappa, 1.0);
  EXPECT_THROW(weighted_kappa({1}, {1, 2}, 5), Error);
  EXPECT_THROW(weighted_kappa({}, {}, 5), Error);
  EXPECT_THROW(weighted_kappa({6}, {1}, 5), Error);
}

TEST(MannWhitney, ExactAgainstEnumeration) {
  for (int n1 = 1; n1 <= 6; ++n1) {
    for (int n2 = 1; n2 <= 6; ++n2) {
      for (int u = 0; u <= n1 * n2; ++u) {
        ASSERT_NEAR(mann_whitney_exact_p(n1, n2, u), test::mw_enumerated_p(n1, n2, u), 1e-12)
            << n1 << "," << n2 << "," << u;
      }
    }
  }
  EXPECT_EQ(mann_whitney_exact_p(2, 2, 0), 1.0 / 3.0);
}

TEST(MannWhitney, StatisticAndMethod) {
  auto r = mann_whitney_u({1, 2}, {3, 4});
  EXPECT_EQ(r.u_x, 0.0);
  EXPECT_EQ(r.u_y, 4.0);
  EXPECT_EQ(r.p_value, 1.0 / 3.0);
  EXPECT_EQ(r.method, TestMethod::kExact);
  EXPECT_FALSE(r.significant);

  std::mt19937_64 rng(8);
  for (int it = 0; it < 200; ++it) {
    std::vector<double> x(1 + rng() % 12), y(1 + rng() % 12);
    for (auto& v : x) v = static_cast<double>(rng() % 6);
    for (auto& v : y) v = static_cast<double>(rng() % 6);
    auto s = mann_whitney_u(x, y);
    ASSERT_EQ(s.u_x, test::mw_pair_u(x, y));
    ASSERT_EQ(s.u_x + s.u_y, static_cast<double>(x.size() * y.size()));
    ASSERT_GE(s.p_value, 0.0);
    ASSERT_LE(s.p_value, 1.0);
  }
  auto tied = mann_whitney_u({1, 1, 2}, {2, 3, 3});
  EXPECT_EQ(tied.method, TestMethod::kNormalApprox);
  std::vector<double> big(21, 0.0), other(20, 1.0);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<double>(i);
  for (std::size_t i = 0; i < other.size(); ++i) other[i] = 100.0 + static_cast<double>(i);
  EXPECT_EQ(mann_whitney_u(big, other).method, TestMethod::kNormalApprox);
  EXPECT_TRUE(mann_whitney_u(big, other).significant);
  EXPECT_THROW(mann_whitney_u({}, {1}), Error);
}

TEST(MannWhitney, Significance) {
  EXPECT_TRUE(is_significant(4.189e-5, 0.05));
  EXPECT_FALSE(is_significant(0.05, 0.05));
  EXPECT_FALSE(is_significant(0.3, 0.05));
}

TEST(Pooling, MatchesIntegerReference) {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 20000; ++it) {
    std::size_t n = 1 + rng() % 4;
    std::vector<JudgeVerdict> vs;
    std::vector<test::RefVerdict> ref;
    for (std::size_t j = 0; j < n; ++j) {
      int s = 1 + static_cast<int>(rng() % 5);
      int t = static_cast<int>(rng() % 11);
      vs.push_back({"j" + std::to_string(j), Criterion::kValidity, s, t / 10.0});
      ref.push_back({s, t});
    }
    ASSERT_EQ(pool_jury(vs).score, test::pool_reference(ref)) << it;
  }
}

TEST(Pooling, HandCases) {
  auto p = pool_jury({{"a", Criterion::kCoverage, 4, 0.9}, {"b", Criterion::kCoverage, 2, 0.8},
                      {"c", Criterion::kCoverage, 2, 0.8}});
  EXPECT_EQ(p.score, 4);
  EXPECT_EQ(p.method, PoolMethod::kConfidenceWeighted);
  EXPECT_EQ(p.votes.at(2), 2);

  p = pool_jury({{"a", Criterion::kCoverage, 4, 0.8}, {"b", Criterion::kCoverage, 2, 0.78},
                 {"c", Criterion::kCoverage, 2, 0.78}});
  EXPECT_EQ(p.score, 2);
  EXPECT_EQ(p.method, PoolMethod::kMajorityFallback);

  // Exactly epsilon apart counts as a lead.
  p = pool_jury({{"a", Criterion::kCoverage, 5, 0.8}, {"b", Criterion::kCoverage, 3, 0.75}});
  EXPECT_EQ(p.score, 5);
  // Vote tie in the fallback keeps the lower score.
  p = pool_jury({{"a", Criterion::kCoverage, 5, 0.5}, {"b", Criterion::kCoverage, 3, 0.5}});
  EXPECT_EQ(p.score, 3);

  EXPECT_THROW(pool_jury({}), Error);
  EXPECT_THROW(pool_jury({{"a", Criterion::kCoverage, 5, 0.5}, {"b", Criterion::kValidity, 3, 0.5}}), Error);
}

TEST(Rubric, LoadsFixtureAndRejectsGaps) {
  auto r = load_rubric(test::data_dir() / "rubric.json");
  for (Criterion c : kAllCriteria) {
    for (const auto& level : r.of(c)) EXPECT_FALSE(level.empty());
  }
  json j = json::parse(std::ifstream(test::data_dir() / "rubric.json"));
  j["criteria"].erase("Validity");
  EXPECT_THROW(rubric_from_json(j), Error);
  EXPECT_EQ(criterion_from_string("Coherence"), Criterion::kCoherence);
  EXPECT_FALSE(criterion_from_string("coherence_x").has_value());
}

TEST(Judge, VerdictsAndAbstentions) {
  json rules = {
      {{"purpose", "judge.Coverage"}, {"profile", "ja"}, {"responses", {{{"text", "{\"score\": 6, \"confidence\": 1}"}}, {{"json", {{"score", 4}, {"confidence", 0.7}}}}}}},
      {{"purpose", "judge.*"}, {"profile", "ja"}, {"responses", {{{"json", {{"score", 3}, {"confidence", 0.5}}}}}}},
      {{"purpose", "judge.*"}, {"profile", "jb"}, {"responses", {{{"text", "fine"}}}}}};
  Gateway g(GatewayConfig{});
  g.set_provider("ja", std::make_shared<MockProvider>(json{{"rules", rules}}));
  g.set_provider("jb", std::make_shared<MockProvider>(json{{"rules", rules}}));
  Rubric rubric = load_rubric(test::data_dir() / "rubric.json");
  CallLog log;
  auto out = judge("q", "a", rubric, {"ja", "jb"}, g, &log);
  ASSERT_EQ(out.verdicts.size(), 4u);
  EXPECT_EQ(out.verdicts[0].criterion, Criterion::kCoverage);
  EXPECT_EQ(out.verdicts[0].score, 4);
  EXPECT_EQ(out.verdicts[1].score, 3);
  EXPECT_EQ(out.abstentions.size(), 4u);
  EXPECT_EQ(out.abstentions[0].judge, "jb");
  EXPECT_EQ(out.abstentions[0].reason, "reply is not a JSON object");
  EXPECT_EQ(log.records().size(), 2u + 3u + 8u);
  EXPECT_THROW(judge("q", "a", rubric, {}, g), Error);
}

TEST(Critical, RequiresEmptyTraceAndNonEmptyOracle) {
  QueryParams oracle;
  oracle.entity_filters = {{EntityType::kAuthor, "A1"}};
  RunTrace t;
  StepResult s;
  s.status = StepStatus::kEmpty;
  t.steps[1] = s;
  EXPECT_TRUE(detect_critical_error(t, oracle, test::tiny()));
  oracle.entity_filters = {{EntityType::kAuthor, "A_NONE"}};
  EXPECT_FALSE(detect_critical_error(t, oracle, test::tiny()));
  t.steps[1].status = StepStatus::kOk;
  oracle.entity_filters = {{EntityType::kAuthor, "A1"}};
  EXPECT_FALSE(detect_critical_error(t, oracle, test::tiny()));
}

TEST(Dblp, CategoryLabels) {
  EXPECT_EQ(dblp_category("SINGLE_FACT"), "single_fact");
  EXPECT_EQ(dblp_category("multi fact"), "multi_fact");
  EXPECT_EQ(dblp_category("Double-Intent"), "double_intent");
  EXPECT_EQ(dblp_category("UNION"), "union");
  EXPECT_EQ(dblp_category("COMPARATIVE"), "comparative_superlative");
  EXPECT_EQ(dblp_category("superlative"), "comparative_superlative");
  EXPECT_FALSE(dblp_category("BOOLEAN").has_value());
  EXPECT_FALSE(dblp_category("").has_value());
}

TEST(Dblp, SamplingIsSeededAndHonoursExclusions) {
  const auto path = test::data_dir() / "dblp_quad_sample.json";
  json doc = json::parse(std::ifstream(path));
  std::map<std::string, std::string> tmpl;
  for (const auto& q : doc["questions"]) tmpl[q["id"]] = q["template_id"];

  auto a = sample_dataset(path, 10, 42, {"TC09"});
  auto b = sample_dataset(path, 10, 42, {"TC09"});
  ASSERT_EQ(a.size(), 50u);
  std::set<std::string> ids;
  std::map<std::string, int> per;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_NE(tmpl[a[i].id], "TC09");
    EXPECT_EQ(a[i].source, "dblp_quad");
    ids.insert(a[i].id);
    ++per[a[i].category];
  }
  EXPECT_EQ(ids.size(), 50u);
  for (const char* c : kDblpCategories) EXPECT_EQ(per[c], 10) << c;
  EXPECT_EQ(a[0].form, QuestionForm::kFactBased);
  EXPECT_EQ(a[49].form, QuestionForm::kComparativeSuperlative);

  auto c = sample_dataset(path, 10, 43, {"TC09"});
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].id != c[i].id;
  EXPECT_TRUE(differs);

  try {
    sample_dataset(path, 10, 42, {"TC01"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSampling);
    EXPECT_NE(std::string(e.what()).find("single_fact"), std::string::npos);
  }
  EXPECT_THROW(sample_dataset(test::data_dir() / "missing.json", 1, 1), Error);
}

TEST(Report, ScoresCriticalKappaAndSignificance) {
  std::vector<ScoredAnswer> answers;
  auto add = [&](const std::string& qid, const std::string& m, int s1, int s2, bool crit) {
    ScoredAnswer a;
    a.question_id = qid;
    a.method = m;
    a.critical_error = crit;
    for (Criterion c : kAllCriteria) {
      a.outcome.verdicts.push_back({"j1", c, s1, 0.9});
      a.outcome.verdicts.push_back({"j2", c, s2, 0.5});
      a.pooled[c] = pool_jury({{"j1", c, s1, 0.9}, {"j2", c, s2, 0.5}});
    }
    answers.push_back(a);
  };
  add("q1", "baseline", 1, 2, true);
  add("q1", "workflow", 5, 4, false);
  add("q2", "baseline", 2, 2, false);
  add("q2", "workflow", 4, 4, false);
  auto r = build_report(answers, {});
  EXPECT_EQ(r["answers"], 4);
  EXPECT_EQ(r["critical_errors"]["baseline"]["count"], 1);
  EXPECT_EQ(r["critical_errors"]["workflow"]["total"], 2);
  EXPECT_DOUBLE_EQ(r["scores"]["workflow"]["Coverage"]["mean"].get<double>(), 4.5);
  EXPECT_DOUBLE_EQ(r["scores"]["baseline"]["Coverage"]["mean"].get<double>(), 1.5);
  EXPECT_EQ(r["significance"]["x"], "workflow");
  EXPECT_EQ(r["significance"]["Validity"]["method"], "exact");
  EXPECT_EQ(r["significance"]["Validity"]["U"], 0.0);
  // Pairs among j1, j2 and the pooled jury.
  ASSERT_EQ(r["kappa"]["Coverage"].size(), 3u);
  std::vector<int> j1{1, 5, 2, 4}, j2{2, 4, 2, 4};
  auto want = test::kappa_double_sum(j1, j2, 5);
  bool found = false;
  for (const auto& row : r["kappa"]["Coverage"]) {
    if (row["a"] == "j1" && row["b"] == "j2") {
      EXPECT_EQ(row["n"], 4);
      EXPECT_NEAR(row["kappa"].get<double>(), *want, 1e-12);
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(Questions, JsonForms) {
  auto q = eval_question_from_json(json{{"id", 7}, {"question", "Who?"}, {"form", "UNION"}});
  EXPECT_EQ(q.id, "7");
  EXPECT_EQ(q.form, QuestionForm::kUnion);
  EXPECT_THROW(eval_question_from_json(json{{"id", "x"}}), Error);
  auto qs = load_questions(test::minisuite_dir() / "questions.jsonl");
  EXPECT_EQ(qs.size(), 20u);
  auto oracles = load_oracles(test::minisuite_dir() / "oracles.jsonl");
  EXPECT_EQ(oracles.size(), 20u);
}
