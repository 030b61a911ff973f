#include "sqa/search.hpp"

#include <algorithm>

#include "sqa/error.hpp"
#include "sqa/kernels.hpp"

namespace sqa {

using nlohmann::json;

std::vector<ArticleIndex> match_articles(const Corpus& corpus, const QueryAst& ast) {
  auto pred = kernels::Predicate::compile(ast, corpus);
  return kernels::match_parallel(corpus, pred);
}

ArticleResultSet article_search(const Corpus& corpus, const QueryAst& ast, int limit,
                                const std::vector<ArticleMetric>& metrics) {
  if (limit < 1) throw Error(ErrorCode::kInvalidInput, "limit must be positive");
  auto matched = match_articles(corpus, ast);
  auto by_rank = [&](ArticleIndex x, ArticleIndex y) {
    const Article& a = corpus.article(x);
    const Article& b = corpus.article(y);
    if (a.citation_count != b.citation_count) return a.citation_count > b.citation_count;
    return a.id < b.id;
  };
  auto keep = std::min<std::size_t>(matched.size(), static_cast<std::size_t>(limit));
  std::partial_sort(matched.begin(), matched.begin() + static_cast<std::ptrdiff_t>(keep),
                    matched.end(), by_rank);

  bool want_cites = std::find(metrics.begin(), metrics.end(), ArticleMetric::kCitationCount) !=
                    metrics.end();
  bool want_fwci = std::find(metrics.begin(), metrics.end(), ArticleMetric::kFwci) != metrics.end();

  ArticleResultSet out;
  out.query = serialize(ast);
  out.total_matches = matched.size();
  for (std::size_t k = 0; k < keep; ++k) {
    const Article& a = corpus.article(matched[k]);
    ArticleRow row{a.id, a.title, a.year, std::nullopt, std::nullopt, want_fwci};
    if (want_cites) row.citation_count = a.citation_count;
    if (want_fwci) row.fwci = corpus.metrics().fwci[matched[k]];
    out.rows.push_back(std::move(row));
  }
  return out;
}

FacetResultSet faceted_article_search(const Corpus& corpus, const QueryAst& ast,
                                      const FacetRequest& facet) {
  if (facet.top_n < 1) throw Error(ErrorCode::kInvalidInput, "top_n must be positive");
  auto matched = match_articles(corpus, ast);
  auto tallies = kernels::facet_tally_parallel(corpus, matched, facet.facet_type);
  if (!facet.exclude_ids.empty()) {
    std::erase_if(tallies, [&](const kernels::FacetTally& t) {
      const auto& id = corpus.entity(t.entity).id;
      return std::find(facet.exclude_ids.begin(), facet.exclude_ids.end(), id) !=
             facet.exclude_ids.end();
    });
  }
  std::sort(tallies.begin(), tallies.end(), [&](const auto& x, const auto& y) {
    if (x.document_count != y.document_count) return x.document_count > y.document_count;
    if (x.total_citations != y.total_citations) return x.total_citations > y.total_citations;
    return corpus.entity(x.entity).id < corpus.entity(y.entity).id;
  });
  if (tallies.size() > static_cast<std::size_t>(facet.top_n)) {
    tallies.resize(static_cast<std::size_t>(facet.top_n));
  }
  auto wants = [&](FacetMetric m) {
    return std::find(facet.metrics.begin(), facet.metrics.end(), m) != facet.metrics.end();
  };
  bool want_cites = wants(FacetMetric::kTotalCitations);
  bool want_fwci = wants(FacetMetric::kAverageFwci);

  FacetResultSet out;
  out.query = serialize(ast);
  out.facet_type = facet.facet_type;
  out.total_matches = matched.size();
  for (const auto& t : tallies) {
    const EntityRef& e = corpus.entity(t.entity);
    FacetRow row{e.id, e.type, e.name, t.document_count, std::nullopt, std::nullopt, want_fwci};
    if (want_cites) row.total_citations = t.total_citations;
    if (want_fwci && t.fwci_count > 0) {
      row.average_fwci = t.fwci_sum / static_cast<double>(t.fwci_count);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

EntityType parse_facet_type(std::string_view name) {
  auto t = entity_type_from_string(name);
  if (!t) {
    throw Error(ErrorCode::kInvalidFacet,
                "invalid facet type \"" + std::string(name) + "\": articles and unknown types "
                "cannot be faceted");
  }
  return *t;
}

void to_json(json& j, const ArticleResultSet& r) {
  j = json{{"kind", "articles"}, {"query", r.query}, {"total_matches", r.total_matches}};
  auto rows = json::array();
  for (const auto& a : r.rows) {
    json row{{"id", a.id}, {"title", a.title}, {"year", a.year}};
    if (a.citation_count) row["citation_count"] = *a.citation_count;
    if (a.fwci_requested) row["fwci"] = a.fwci ? json(*a.fwci) : json(nullptr);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
}

void to_json(json& j, const FacetResultSet& r) {
  j = json{{"kind", "facets"},
           {"query", r.query},
           {"facet_type", to_string(r.facet_type)},
           {"total_matches", r.total_matches}};
  auto rows = json::array();
  for (const auto& f : r.rows) {
    json row{{"id", f.id},
             {"type", to_string(f.type)},
             {"name", f.name},
             {"document_count", f.document_count}};
    if (f.total_citations) row["total_citations"] = *f.total_citations;
    if (f.average_fwci_requested) {
      row["average_fwci"] = f.average_fwci ? json(*f.average_fwci) : json(nullptr);
    }
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
}

ArticleResultSet article_results_from_json(const json& j) {
  ArticleResultSet r;
  r.query = j.value("query", "");
  r.total_matches = j.value("total_matches", std::size_t{0});
  for (const auto& row : j.at("rows")) {
    ArticleRow a;
    a.id = row.at("id").get<std::string>();
    a.title = row.value("title", "");
    a.year = row.value("year", 0);
    if (row.contains("citation_count")) a.citation_count = row["citation_count"].get<std::int64_t>();
    if (row.contains("fwci")) {
      a.fwci_requested = true;
      if (!row["fwci"].is_null()) a.fwci = row["fwci"].get<double>();
    }
    r.rows.push_back(std::move(a));
  }
  return r;
}

FacetResultSet facet_results_from_json(const json& j) {
  FacetResultSet r;
  r.query = j.value("query", "");
  r.facet_type = parse_facet_type(j.at("facet_type").get<std::string>());
  r.total_matches = j.value("total_matches", std::size_t{0});
  for (const auto& row : j.at("rows")) {
    FacetRow f;
    f.id = row.at("id").get<std::string>();
    f.type = parse_facet_type(row.at("type").get<std::string>());
    f.name = row.value("name", "");
    f.document_count = row.at("document_count").get<std::size_t>();
    if (row.contains("total_citations")) f.total_citations = row["total_citations"].get<std::int64_t>();
    if (row.contains("average_fwci")) {
      f.average_fwci_requested = true;
      if (!row["average_fwci"].is_null()) f.average_fwci = row["average_fwci"].get<double>();
    }
    r.rows.push_back(std::move(f));
  }
  return r;
}

}  // namespace sqa
