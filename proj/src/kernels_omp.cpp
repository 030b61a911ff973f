#include <algorithm>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kernels_detail.hpp"
#include "sqa/kernels.hpp"

namespace sqa::kernels {

namespace {
// Below this many work items the fork/join cost dominates.
constexpr std::int64_t kMinParallel = 2048;
}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<ArticleIndex> match_parallel(const Corpus& corpus, const Predicate& p) {
  auto arts = corpus.articles();
  const auto n = static_cast<std::int64_t>(arts.size());
  std::vector<std::uint8_t> hit(arts.size(), 0);
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
  for (std::int64_t i = 0; i < n; ++i) {
    auto idx = static_cast<ArticleIndex>(i);
    hit[idx] = p.matches(arts[idx], idx) ? 1 : 0;
  }
  std::vector<ArticleIndex> out;
  for (ArticleIndex i = 0; i < hit.size(); ++i) {
    if (hit[i]) out.push_back(i);
  }
  return out;
}

// One task per facet entity: intersect its posting list with the matched set.
std::vector<FacetTally> facet_tally_parallel(const Corpus& corpus,
                                             std::span<const ArticleIndex> matched,
                                             EntityType facet) {
  const auto& fwci = corpus.metrics().fwci;
  std::vector<std::uint8_t> in_set(corpus.articles().size(), 0);
  for (ArticleIndex i : matched) in_set[i] = 1;

  auto ids = corpus.entities_of_type(facet);
  const auto n = static_cast<std::int64_t>(ids.size());
  std::vector<FacetTally> all(ids.size());
#pragma omp parallel for schedule(dynamic, 64) if (n >= kMinParallel / 8)
  for (std::int64_t k = 0; k < n; ++k) {
    FacetTally t;
    t.entity = ids[static_cast<std::size_t>(k)];
    for (ArticleIndex i : corpus.postings(t.entity)) {
      if (!in_set[i]) continue;
      t.document_count += 1;
      t.total_citations += corpus.article(i).citation_count;
      if (fwci[i]) {
        t.fwci_sum += *fwci[i];
        t.fwci_count += 1;
      }
    }
    all[static_cast<std::size_t>(k)] = t;
  }
  std::vector<FacetTally> out;
  for (const auto& t : all) {
    if (t.document_count > 0) out.push_back(t);
  }
  std::sort(out.begin(), out.end(),
            [](const FacetTally& x, const FacetTally& y) { return x.entity < y.entity; });
  return out;
}

std::vector<EntityScore> score_entities_parallel(const EntityResolver& resolver, EntityType type,
                                                 const NameKey& query) {
  auto ids = resolver.corpus().entities_of_type(type);
  const auto n = static_cast<std::int64_t>(ids.size());
  std::vector<EntityScore> out(ids.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
  for (std::int64_t k = 0; k < n; ++k) {
    EntityScore s;
    for (const auto& key : resolver.keys(ids[static_cast<std::size_t>(k)])) {
      if (key.text == query.text) {
        s = {1.0, true};
        break;
      }
      s.score = std::max(s.score, similarity(key, query));
    }
    out[static_cast<std::size_t>(k)] = s;
  }
  return out;
}

MetricsIndex compute_metrics_parallel(const Corpus& corpus) {
  auto means = detail::bucket_means(corpus);
  MetricsIndex m;
  auto arts = corpus.articles();
  const auto n = static_cast<std::int64_t>(arts.size());
  m.fwci.resize(arts.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
  for (std::int64_t i = 0; i < n; ++i) {
    auto idx = static_cast<std::size_t>(i);
    m.fwci[idx] = detail::article_fwci(arts[idx], means);
  }
  const auto ne = static_cast<std::int64_t>(corpus.entities().size());
  m.entity.resize(corpus.entities().size());
#pragma omp parallel for schedule(dynamic, 64) if (ne >= kMinParallel / 8)
  for (std::int64_t e = 0; e < ne; ++e) {
    auto idx = static_cast<EntityIndex>(e);
    m.entity[idx] = detail::entity_aggregate(corpus, idx, m.fwci);
  }
  return m;
}

}  // namespace sqa::kernels
