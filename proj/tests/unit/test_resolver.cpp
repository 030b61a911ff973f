#include <algorithm>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "sqa/error.hpp"
#include "sqa/kernels.hpp"
#include "support.hpp"

using namespace sqa;

namespace {

// Trigram Jaccard on already-normalized ASCII.
double jaccard_oracle(const std::string& a, const std::string& b) {
  if (a.size() < 3 || b.size() < 3) return a == b ? 1.0 : 0.0;
  std::set<std::string> x, y;
  for (std::size_t i = 0; i + 3 <= a.size(); ++i) x.insert(a.substr(i, 3));
  for (std::size_t i = 0; i + 3 <= b.size(); ++i) y.insert(b.substr(i, 3));
  std::size_t inter = 0;
  for (const auto& g : x) inter += y.count(g);
  return static_cast<double>(inter) / static_cast<double>(x.size() + y.size() - inter);
}

}  // namespace

TEST(Normalize, FoldsCaseAccentsPunctuation) {
  EXPECT_EQ(normalize_name("  Technische   Universität Berlin "), "technische universitat berlin");
  EXPECT_EQ(normalize_name("Durelli, G."), "durelli g");
  EXPECT_EQ(normalize_name("ÉCOLE Polytechnique"), "ecole polytechnique");
  EXPECT_EQ(normalize_name("...!"), "");
}

TEST(Similarity, MatchesOracle) {
  std::mt19937 rng(7);
  const std::string alphabet = "abcde ";
  for (int i = 0; i < 500; ++i) {
    auto word = [&] {
      std::string s;
      int n = std::uniform_int_distribution<int>(1, 9)(rng);
      for (int k = 0; k < n; ++k) s += alphabet[std::uniform_int_distribution<int>(0, 4)(rng)];
      return s;
    };
    std::string a = word(), b = word();
    EXPECT_NEAR(similarity(a, b), jaccard_oracle(a, b), 1e-12) << a << " | " << b;
  }
  EXPECT_EQ(similarity("Chang Yun Park", "chang yun park"), 1.0);
  EXPECT_EQ(similarity("ab", "ab"), 1.0);
  EXPECT_EQ(similarity("ab", "abc"), 0.0);
}

TEST(Resolver, ExactAndAlias) {
  const auto& r = test::fixture_resolver();
  auto park = r.resolve("Chang Yun Park", EntityType::kAuthor);
  ASSERT_FALSE(park.no_match());
  EXPECT_EQ(park.candidates[0].entity.id, "A_PARK_CY");
  EXPECT_TRUE(park.candidates[0].exact);
  EXPECT_EQ(park.candidates[0].score, 1.0);

  auto durelli = r.resolve("Durelli, G.", EntityType::kAuthor);
  ASSERT_FALSE(durelli.no_match());
  EXPECT_EQ(durelli.candidates[0].entity.id, "A_DURELLI_GC");
  EXPECT_TRUE(durelli.candidates[0].exact);

  auto ox = r.resolve("Oxford University", EntityType::kInstitution);
  EXPECT_EQ(ox.candidates.at(0).entity.id, "I_OXFORD");
}

TEST(Resolver, FuzzyAndTypeScoped) {
  const auto& r = test::fixture_resolver();
  auto m = r.resolve("Santambrogio", EntityType::kAuthor);
  ASSERT_FALSE(m.no_match());
  EXPECT_EQ(m.candidates[0].entity.id, "A_SANTAMBROGIO_MD");
  EXPECT_FALSE(m.candidates[0].exact);
  EXPECT_TRUE(r.resolve("Santambrogio", EntityType::kInstitution).no_match());
  EXPECT_TRUE(r.resolve("zzqx", EntityType::kAuthor).no_match());
}

TEST(Resolver, HomonymsAreBothReturned) {
  auto m = test::fixture_resolver().resolve("Wei Zhang", EntityType::kAuthor);
  ASSERT_GE(m.candidates.size(), 2u);
  std::set<std::string> top{m.candidates[0].entity.id, m.candidates[1].entity.id};
  EXPECT_EQ(top, (std::set<std::string>{"A_ZHANG_W1", "A_ZHANG_W2"}));
  EXPECT_TRUE(m.candidates[0].exact && m.candidates[1].exact);
  EXPECT_LT(m.candidates[0].entity.id, m.candidates[1].entity.id);
}

TEST(Resolver, RankingRespectsThresholdAndTopK) {
  const auto& r = test::fixture_resolver();
  auto m = r.resolve("University", EntityType::kInstitution, 3, 0.1);
  EXPECT_LE(m.candidates.size(), 3u);
  for (std::size_t i = 0; i < m.candidates.size(); ++i) {
    EXPECT_GE(m.candidates[i].score, 0.1);
    if (i) EXPECT_GE(m.candidates[i - 1].score, m.candidates[i].score);
  }
}

TEST(Resolver, EmptyNameIsInvalid) {
  try {
    test::fixture_resolver().resolve(" ,. ", EntityType::kAuthor);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(Resolver, SerialAndParallelScoresAgree) {
  const auto& r = test::fixture_resolver();
  for (const char* q : {"Chang Yun Park", "Oxford", "Neuro", "Wei Zhang", "Machine Learning"}) {
    auto key = make_name_key(q);
    for (EntityType t : kAllEntityTypes) {
      auto s = kernels::score_entities_serial(r, t, key);
      auto p = kernels::score_entities_parallel(r, t, key);
      ASSERT_EQ(s.size(), p.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s[i].score, p[i].score);
        EXPECT_EQ(s[i].exact, p[i].exact);
      }
    }
  }
}
