#pragma once
// Brute-force reference implementations used by the unit and acceptance
// tests. They read ArticleRecord values and never touch the indices or the
// query AST.

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sqa/corpus.hpp"
#include "sqa/query.hpp"

namespace sqa::test {

inline std::vector<std::string> ids_of(const ArticleRecord& r, EntityType t) {
  std::vector<std::string> out;
  auto add = [&](const std::vector<EntityRef>& v) {
    for (const auto& e : v) out.push_back(e.id);
  };
  switch (t) {
    case EntityType::kAuthor: add(r.authors); break;
    case EntityType::kInstitution: add(r.institutions); break;
    case EntityType::kVenue:
      if (r.venue) out.push_back(r.venue->id);
      break;
    case EntityType::kTopic: add(r.topics); break;
    case EntityType::kSubjectArea: add(r.subject_areas); break;
    case EntityType::kSdg: add(r.sdgs); break;
  }
  return out;
}

inline bool has_id(const ArticleRecord& r, EntityType t, const std::string& id) {
  auto v = ids_of(r, t);
  return std::find(v.begin(), v.end(), id) != v.end();
}

/// Direct evaluation of QueryParams: same-type filters are alternatives,
/// groups are joined by the connective, negated filters exclude, required
/// filters must all hold.
inline bool params_match(const ArticleRecord& r, const QueryParams& p) {
  std::map<EntityType, bool> groups;
  for (const auto& f : p.entity_filters) {
    bool h = has_id(r, f.type, f.id);
    if (f.negate) {
      if (h) return false;
    } else if (f.required) {
      if (!h) return false;
    } else {
      groups[f.type] = groups[f.type] || h;
    }
  }
  if (!groups.empty()) {
    bool all = true, any = false;
    for (const auto& [t, v] : groups) {
      all = all && v;
      any = any || v;
    }
    if (!(p.connective == Connective::kAnd ? all : any)) return false;
  }
  if (p.year_range && (r.year < p.year_range->min || r.year > p.year_range->max)) return false;
  if (!p.article_ids.empty() &&
      std::find(p.article_ids.begin(), p.article_ids.end(), r.id) == p.article_ids.end()) {
    return false;
  }
  return true;
}

inline std::vector<ArticleRecord> records(const Corpus& c) {
  std::vector<ArticleRecord> out;
  for (ArticleIndex i = 0; i < c.articles().size(); ++i) out.push_back(c.record(i));
  return out;
}

/// Random parameters over ids that exist in `c` (plus the odd unknown one).
inline QueryParams random_params(std::mt19937_64& rng, const Corpus& c) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  QueryParams p;
  int nf = pick(0, 5);
  for (int i = 0; i < nf; ++i) {
    EntityType t = kAllEntityTypes[static_cast<std::size_t>(pick(0, 5))];
    auto ents = c.entities_of_type(t);
    EntityFilter f;
    f.type = t;
    if (ents.empty() || pick(0, 19) == 0) {
      f.id = "UNKNOWN_" + std::to_string(pick(0, 9));
    } else {
      f.id = c.entity(ents[static_cast<std::size_t>(pick(0, static_cast<int>(ents.size()) - 1))]).id;
    }
    int mode = pick(0, 9);
    f.negate = mode == 0;
    f.required = mode == 1;
    p.entity_filters.push_back(f);
  }
  if (pick(0, 1)) {
    int a = pick(2013, 2024), b = pick(2013, 2024);
    p.year_range = YearRange{std::min(a, b), std::max(a, b)};
  }
  p.connective = pick(0, 1) ? Connective::kAnd : Connective::kOr;
  if (pick(0, 7) == 0) {
    int n = pick(1, 4);
    for (int i = 0; i < n; ++i) {
      p.article_ids.push_back(c.article(static_cast<ArticleIndex>(pick(0, static_cast<int>(c.articles().size()) - 1))).id);
    }
  }
  p.limit = pick(1, 30);
  return p;
}

}  // namespace sqa::test
