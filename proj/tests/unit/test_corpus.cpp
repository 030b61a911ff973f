#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sqa/error.hpp"
#include "sqa/kernels.hpp"
#include "support.hpp"

using nlohmann::json;
using namespace sqa;

namespace {

std::vector<json> raw_fixture() {
  std::ifstream in(test::data_dir() / "fixture_500.jsonl");
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

std::string entry_id(const json& e) { return e.is_string() ? e.get<std::string>() : e.at("id").get<std::string>(); }

// fwci from the raw records: buckets keyed by (subject area, year).
std::map<std::string, std::optional<double>> fwci_oracle(const std::vector<json>& rows) {
  std::map<std::pair<std::string, int>, std::pair<double, int>> buckets;
  for (const auto& r : rows) {
    for (const auto& s : r["subject_areas"]) {
      auto& b = buckets[{entry_id(s), r["year"].get<int>()}];
      b.first += r["citation_count"].get<double>();
      b.second += 1;
    }
  }
  std::map<std::string, std::optional<double>> out;
  for (const auto& r : rows) {
    double sum = 0;
    int n = 0;
    for (const auto& s : r["subject_areas"]) {
      const auto& b = buckets[{entry_id(s), r["year"].get<int>()}];
      double mean = b.first / b.second;
      if (mean == 0) continue;
      sum += r["citation_count"].get<double>() / mean;
      ++n;
    }
    out[r["id"]] = n ? std::optional<double>(sum / n) : std::nullopt;
  }
  return out;
}

void expect_ingestion_error(const std::string& text, const std::string& fragment) {
  try {
    Corpus::parse(std::string_view(text), "bad");
    FAIL() << "accepted: " << text;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIngestion);
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

const char* kOk = R"({"id":"X","title":"t","year":2000,"citation_count":1,"authors":[{"id":"A","name":"N"}]})";

}  // namespace

TEST(Corpus, TinyStats) {
  const auto& s = test::tiny().stats();
  EXPECT_EQ(s.articles, 5u);
  EXPECT_EQ(s.count(EntityType::kAuthor), 3u);
  EXPECT_EQ(s.count(EntityType::kInstitution), 2u);
  EXPECT_EQ(s.count(EntityType::kVenue), 2u);
  EXPECT_EQ(s.count(EntityType::kTopic), 2u);
  EXPECT_EQ(s.count(EntityType::kSubjectArea), 2u);
  EXPECT_EQ(s.count(EntityType::kSdg), 1u);
  EXPECT_EQ(s.references, 4u);
}

TEST(Corpus, FixtureStatsMatchRawCounts) {
  auto rows = raw_fixture();
  std::array<std::set<std::string>, kEntityTypeCount> ids;
  std::size_t refs = 0;
  for (const auto& r : rows) {
    for (EntityType t : kAllEntityTypes) {
      const json& f = r[std::string(corpus_field(t))];
      if (f.is_array()) {
        for (const auto& e : f) ids[index_of(t)].insert(entry_id(e));
      } else {
        ids[index_of(t)].insert(entry_id(f));
      }
    }
    refs += r["references"].size();
  }
  const auto& s = test::fixture().stats();
  EXPECT_EQ(s.articles, rows.size());
  for (EntityType t : kAllEntityTypes) EXPECT_EQ(s.count(t), ids[index_of(t)].size()) << to_string(t);
  EXPECT_EQ(s.references, refs);
}

TEST(Corpus, LookupNeverFabricates) {
  const auto& c = test::tiny();
  auto e = c.get_entity("I1", EntityType::kInstitution);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->name, "University of Oxford");
  EXPECT_EQ(e->aliases, std::vector<std::string>{"Oxford University"});
  EXPECT_FALSE(c.get_entity("I1", EntityType::kAuthor));
  EXPECT_FALSE(c.get_entity("nope", EntityType::kInstitution));
  EXPECT_EQ(c.types_of("I1"), std::vector<EntityType>{EntityType::kInstitution});
  EXPECT_TRUE(c.types_of("W1").empty());
}

TEST(Corpus, RecordRoundTrip) {
  const auto& c = test::tiny();
  auto i = c.find_article("W3");
  ASSERT_TRUE(i);
  auto r = c.record(*i);
  EXPECT_EQ(r.year, 2020);
  ASSERT_TRUE(r.venue);
  EXPECT_EQ(r.venue->id, "V1");
  EXPECT_EQ(r.institutions.size(), 2u);
  EXPECT_EQ(r.references, (std::vector<std::string>{"W1", "W2"}));
}

TEST(Corpus, PostingsAreSortedAndComplete) {
  const auto& c = test::fixture();
  for (EntityIndex e = 0; e < c.entities().size(); ++e) {
    auto p = c.postings(e);
    EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
    for (ArticleIndex a : p) {
      auto list = c.article(a).of(c.entity(e).type);
      EXPECT_TRUE(std::binary_search(list.begin(), list.end(), e));
    }
  }
}

TEST(Corpus, DigestDependsOnBytes) {
  std::string a = test::kTinyCorpus;
  auto c1 = Corpus::parse(std::string_view(a));
  auto c2 = Corpus::parse(std::string_view(a));
  EXPECT_EQ(c1.digest(), c2.digest());
  EXPECT_EQ(c1.digest(), fnv1a_hex(a));
  EXPECT_NE(c1.digest(), Corpus::parse(std::string_view(a + "\n")).digest());
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
}

TEST(Corpus, RejectsInvalidRecords) {
  expect_ingestion_error("{not json", "malformed JSON");
  expect_ingestion_error(R"({"title":"t","year":2000,"citation_count":1})", "\"id\"");
  expect_ingestion_error(R"({"id":"X","title":"t","year":1400,"citation_count":1})", "year out of range");
  expect_ingestion_error(R"({"id":"X","title":"t","year":2000,"citation_count":-1})", "negative citation_count");
  expect_ingestion_error(R"({"id":"X","title":"t","year":2000,"citation_count":1,"references":["X"]})",
                         "references itself");
  expect_ingestion_error(std::string(kOk) + "\n" + kOk, "duplicate article id X");
  expect_ingestion_error(R"({"id":"X","title":"t","year":2000,"citation_count":1,"references":["Y"]})",
                         "reference Y");
  expect_ingestion_error(R"({"id":"X","title":"t","year":2000,"citation_count":1,"authors":["A9"]})",
                         "AUTHOR:A9");
  expect_ingestion_error(R"({"id":"X","title":"t","year":2000,"citation_count":1,"authors":{"id":"A"}})",
                         "must be an array");
}

TEST(Corpus, ErrorNamesLine) {
  try {
    Corpus::parse(std::string_view(std::string(kOk) + "\n\n{bad"), "f.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("f.jsonl:3:"), std::string::npos) << e.what();
  }
}

TEST(Corpus, MissingFile) {
  EXPECT_THROW(Corpus::load("/nonexistent/corpus.jsonl"), Error);
}

TEST(Fwci, TinyHandValues) {
  const auto& c = test::tiny();
  auto f = [&](const char* id) { return c.metrics().fwci[*c.find_article(id)]; };
  EXPECT_EQ(f("W1"), 1.0);
  EXPECT_DOUBLE_EQ(*f("W2"), 1.5);
  EXPECT_DOUBLE_EQ(*f("W3"), 0.75);
  EXPECT_FALSE(f("W4"));
  EXPECT_FALSE(f("W5"));
  auto a1 = c.metrics().entity[*c.find_entity(EntityType::kAuthor, "A1")];
  EXPECT_EQ(a1.document_count, 3u);
  EXPECT_EQ(a1.total_citations, 20);
  EXPECT_DOUBLE_EQ(*a1.average_fwci, 0.875);
  auto a3 = c.metrics().entity[*c.find_entity(EntityType::kAuthor, "A3")];
  EXPECT_DOUBLE_EQ(*a3.average_fwci, 1.5);
}

TEST(Fwci, FixtureMatchesOracle) {
  auto rows = raw_fixture();
  auto oracle = fwci_oracle(rows);
  const auto& c = test::fixture();
  for (const auto& [id, want] : oracle) {
    auto got = c.metrics().fwci[*c.find_article(id)];
    ASSERT_EQ(got.has_value(), want.has_value()) << id;
    if (want) EXPECT_NEAR(*got, *want, 1e-12) << id;
  }
}

TEST(Fwci, SerialAndParallelAgree) {
  const auto& c = test::fixture();
  auto s = kernels::compute_metrics_serial(c);
  auto p = kernels::compute_metrics_parallel(c);
  ASSERT_EQ(s.fwci.size(), p.fwci.size());
  for (std::size_t i = 0; i < s.fwci.size(); ++i) {
    ASSERT_EQ(s.fwci[i].has_value(), p.fwci[i].has_value());
    if (s.fwci[i]) EXPECT_NEAR(*s.fwci[i], *p.fwci[i], 1e-12);
  }
  for (std::size_t e = 0; e < s.entity.size(); ++e) {
    EXPECT_EQ(s.entity[e].document_count, p.entity[e].document_count);
    EXPECT_EQ(s.entity[e].total_citations, p.entity[e].total_citations);
    ASSERT_EQ(s.entity[e].average_fwci.has_value(), p.entity[e].average_fwci.has_value());
    if (s.entity[e].average_fwci) EXPECT_NEAR(*s.entity[e].average_fwci, *p.entity[e].average_fwci, 1e-12);
  }
}

TEST(Fwci, ZeroBucketIsUndefined) {
  const auto& c = test::fixture();
  auto math = *c.find_entity(EntityType::kSubjectArea, "SA_MATH");
  int seen = 0;
  for (ArticleIndex a : c.postings(math)) {
    if (c.article(a).year != 2015) continue;
    ++seen;
    EXPECT_EQ(c.article(a).citation_count, 0);
    EXPECT_FALSE(c.metrics().fwci[a]);
  }
  EXPECT_GT(seen, 0);
}
