#pragma once

// Data-parallel inner loops of the search stack. Every kernel has an OpenMP
// version used in production and a serial reference kept for tests and the
// benchmark; the two must agree on every input.

#include <cstdint>
#include <span>
#include <vector>

#include "sqa/corpus.hpp"
#include "sqa/resolver.hpp"

namespace sqa {
struct QueryAst;
}

namespace sqa::kernels {

/// QueryAst compiled against one corpus: ids interned to entity/article
/// indices, unknown ids compiled to a never-matching node.
class Predicate {
 public:
  enum class Op : std::uint8_t { kAll, kNone, kEntity, kYear, kDoc, kNot, kAnd, kOr };

  struct Node {
    Op op = Op::kAll;
    EntityType type = EntityType::kAuthor;
    EntityIndex entity = 0;
    ArticleIndex doc = 0;
    int lo = 0;
    int hi = 0;
    std::vector<std::uint32_t> children;
  };

  static Predicate compile(const QueryAst& ast, const Corpus& corpus);

  bool matches(const Article& a, ArticleIndex index) const {
    return eval(root_, a, index);
  }

 private:
  bool eval(std::uint32_t n, const Article& a, ArticleIndex index) const;
  std::uint32_t add(const QueryAst& ast, const Corpus& corpus);

  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
};

/// Indices of matching articles in ascending order.
std::vector<ArticleIndex> match_serial(const Corpus& corpus, const Predicate& p);
std::vector<ArticleIndex> match_parallel(const Corpus& corpus, const Predicate& p);

struct FacetTally {
  EntityIndex entity = 0;
  std::size_t document_count = 0;
  std::int64_t total_citations = 0;
  double fwci_sum = 0.0;
  std::size_t fwci_count = 0;
};

/// Per-entity tallies over `matched` (sorted ascending) for one facet type.
/// Entities with zero matched documents are omitted; output is sorted by
/// entity index.
std::vector<FacetTally> facet_tally_serial(const Corpus& corpus,
                                           std::span<const ArticleIndex> matched,
                                           EntityType facet);
std::vector<FacetTally> facet_tally_parallel(const Corpus& corpus,
                                             std::span<const ArticleIndex> matched,
                                             EntityType facet);

/// Best similarity of `query` against each entity of `type` (name or any
/// alias), in entities_of_type order. `exact` flags normalized equality.
struct EntityScore {
  double score = 0.0;
  bool exact = false;
};
std::vector<EntityScore> score_entities_serial(const EntityResolver& resolver,
                                               EntityType type, const NameKey& query);
std::vector<EntityScore> score_entities_parallel(const EntityResolver& resolver,
                                                 EntityType type, const NameKey& query);

MetricsIndex compute_metrics_serial(const Corpus& corpus);
MetricsIndex compute_metrics_parallel(const Corpus& corpus);

int max_threads();

}  // namespace sqa::kernels
