#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqa/corpus.hpp"
#include "sqa/query.hpp"

namespace sqa {

struct ArticleRow {
  std::string id;
  std::string title;
  int year = 0;
  std::optional<std::int64_t> citation_count;  // present when requested
  std::optional<double> fwci;                  // present when requested and defined
  bool fwci_requested = false;

  bool operator==(const ArticleRow&) const = default;
};

struct ArticleResultSet {
  std::string query;
  std::size_t total_matches = 0;
  std::vector<ArticleRow> rows;

  bool operator==(const ArticleResultSet&) const = default;
};

struct FacetRow {
  std::string id;
  EntityType type = EntityType::kAuthor;
  std::string name;
  std::size_t document_count = 0;
  std::optional<std::int64_t> total_citations;
  std::optional<double> average_fwci;
  bool average_fwci_requested = false;

  bool operator==(const FacetRow&) const = default;
};

struct FacetResultSet {
  std::string query;
  EntityType facet_type = EntityType::kAuthor;
  std::size_t total_matches = 0;
  std::vector<FacetRow> rows;

  bool operator==(const FacetResultSet&) const = default;
};

void to_json(nlohmann::json& j, const ArticleResultSet& r);
void to_json(nlohmann::json& j, const FacetResultSet& r);
ArticleResultSet article_results_from_json(const nlohmann::json& j);
FacetResultSet facet_results_from_json(const nlohmann::json& j);

/// Matching articles ordered by descending citation count, then ascending id.
ArticleResultSet article_search(const Corpus& corpus, const QueryAst& ast, int limit,
                                const std::vector<ArticleMetric>& metrics);

/// Groups matching articles by entities of the facet type and returns the
/// top_n by document count (ties: descending total citations, then id).
FacetResultSet faceted_article_search(const Corpus& corpus, const QueryAst& ast,
                                      const FacetRequest& facet);

/// Facet type from its wire name; Error(kInvalidFacet) for ARTICLE or any
/// unknown name.
EntityType parse_facet_type(std::string_view name);

/// Indices of all articles satisfying `ast`, ascending.
std::vector<ArticleIndex> match_articles(const Corpus& corpus, const QueryAst& ast);

}  // namespace sqa
