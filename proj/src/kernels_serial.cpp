// Serial reference kernels. These are the readable versions; the OpenMP
// kernels in kernels_omp.cpp must produce identical results.

#include <algorithm>
#include <map>
#include <unordered_map>

#include "kernels_detail.hpp"
#include "sqa/kernels.hpp"
#include "sqa/query.hpp"

namespace sqa::kernels {

std::uint32_t Predicate::add(const QueryAst& ast, const Corpus& corpus) {
  Node node;
  switch (ast.kind) {
    case QueryAst::Kind::kAll:
      node.op = Op::kAll;
      break;
    case QueryAst::Kind::kEntity: {
      auto e = corpus.find_entity(ast.type, ast.id);
      node.op = e ? Op::kEntity : Op::kNone;
      node.type = ast.type;
      node.entity = e.value_or(0);
      break;
    }
    case QueryAst::Kind::kYear:
      node.op = Op::kYear;
      node.lo = ast.year_min;
      node.hi = ast.year_max;
      break;
    case QueryAst::Kind::kDoc: {
      auto a = corpus.find_article(ast.id);
      node.op = a ? Op::kDoc : Op::kNone;
      node.doc = a.value_or(0);
      break;
    }
    case QueryAst::Kind::kNot:
    case QueryAst::Kind::kAnd:
    case QueryAst::Kind::kOr: {
      node.op = ast.kind == QueryAst::Kind::kNot   ? Op::kNot
                : ast.kind == QueryAst::Kind::kAnd ? Op::kAnd
                                                   : Op::kOr;
      for (const auto& c : ast.children) node.children.push_back(add(c, corpus));
      break;
    }
  }
  nodes_.push_back(std::move(node));
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

Predicate Predicate::compile(const QueryAst& ast, const Corpus& corpus) {
  Predicate p;
  p.root_ = p.add(ast, corpus);
  return p;
}

bool Predicate::eval(std::uint32_t n, const Article& a, ArticleIndex index) const {
  const Node& node = nodes_[n];
  switch (node.op) {
    case Op::kAll: return true;
    case Op::kNone: return false;
    case Op::kEntity: {
      auto list = a.of(node.type);
      return std::binary_search(list.begin(), list.end(), node.entity);
    }
    case Op::kYear: return a.year >= node.lo && a.year <= node.hi;
    case Op::kDoc: return index == node.doc;
    case Op::kNot: return !eval(node.children.at(0), a, index);
    case Op::kAnd:
      for (auto c : node.children) {
        if (!eval(c, a, index)) return false;
      }
      return true;
    case Op::kOr:
      for (auto c : node.children) {
        if (eval(c, a, index)) return true;
      }
      return false;
  }
  return false;
}

std::vector<ArticleIndex> match_serial(const Corpus& corpus, const Predicate& p) {
  std::vector<ArticleIndex> out;
  auto arts = corpus.articles();
  for (ArticleIndex i = 0; i < arts.size(); ++i) {
    if (p.matches(arts[i], i)) out.push_back(i);
  }
  return out;
}

// Hash group-by over the matched articles.
std::vector<FacetTally> facet_tally_serial(const Corpus& corpus,
                                           std::span<const ArticleIndex> matched,
                                           EntityType facet) {
  const auto& fwci = corpus.metrics().fwci;
  std::unordered_map<EntityIndex, FacetTally> groups;
  for (ArticleIndex i : matched) {
    const Article& a = corpus.article(i);
    for (EntityIndex e : a.of(facet)) {
      FacetTally& t = groups[e];
      t.entity = e;
      t.document_count += 1;
      t.total_citations += a.citation_count;
      if (fwci[i]) {
        t.fwci_sum += *fwci[i];
        t.fwci_count += 1;
      }
    }
  }
  std::vector<FacetTally> out;
  out.reserve(groups.size());
  for (auto& [e, t] : groups) out.push_back(t);
  std::sort(out.begin(), out.end(),
            [](const FacetTally& x, const FacetTally& y) { return x.entity < y.entity; });
  return out;
}

std::vector<EntityScore> score_entities_serial(const EntityResolver& resolver, EntityType type,
                                               const NameKey& query) {
  auto ids = resolver.corpus().entities_of_type(type);
  std::vector<EntityScore> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (const auto& key : resolver.keys(ids[i])) {
      if (key.text == query.text) {
        out[i] = {1.0, true};
        break;
      }
      out[i].score = std::max(out[i].score, similarity(key, query));
    }
  }
  return out;
}

namespace detail {

BucketMeans bucket_means(const Corpus& corpus) {
  std::map<std::pair<EntityIndex, int>, std::pair<long double, std::size_t>> acc;
  for (const Article& a : corpus.articles()) {
    for (EntityIndex s : a.of(EntityType::kSubjectArea)) {
      auto& [sum, n] = acc[{s, a.year}];
      sum += static_cast<long double>(a.citation_count);
      n += 1;
    }
  }
  BucketMeans out;
  for (const auto& [k, v] : acc) {
    out.mean[k] = static_cast<double>(v.first / static_cast<long double>(v.second));
  }
  return out;
}

std::optional<double> article_fwci(const Article& a, const BucketMeans& means) {
  double ratio_sum = 0.0;
  std::size_t used = 0;
  for (EntityIndex s : a.of(EntityType::kSubjectArea)) {
    double m = means.mean.at({s, a.year});
    if (m > 0.0) {
      ratio_sum += static_cast<double>(a.citation_count) / m;
      ++used;
    }
  }
  if (used == 0) return std::nullopt;
  return ratio_sum / static_cast<double>(used);
}

EntityAggregate entity_aggregate(const Corpus& corpus, EntityIndex e,
                                 const std::vector<std::optional<double>>& fwci) {
  EntityAggregate agg;
  double sum = 0.0;
  std::size_t n = 0;
  for (ArticleIndex i : corpus.postings(e)) {
    agg.document_count += 1;
    agg.total_citations += corpus.article(i).citation_count;
    if (fwci[i]) {
      sum += *fwci[i];
      ++n;
    }
  }
  if (n > 0) agg.average_fwci = sum / static_cast<double>(n);
  return agg;
}

}  // namespace detail

MetricsIndex compute_metrics_serial(const Corpus& corpus) {
  auto means = detail::bucket_means(corpus);
  MetricsIndex m;
  auto arts = corpus.articles();
  m.fwci.resize(arts.size());
  for (std::size_t i = 0; i < arts.size(); ++i) m.fwci[i] = detail::article_fwci(arts[i], means);
  m.entity.resize(corpus.entities().size());
  for (EntityIndex e = 0; e < m.entity.size(); ++e) {
    m.entity[e] = detail::entity_aggregate(corpus, e, m.fwci);
  }
  return m;
}

}  // namespace sqa::kernels
