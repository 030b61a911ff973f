#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqa/types.hpp"

namespace sqa {

class Corpus;
class EntityResolver;

enum class Connective { kAnd, kOr };

struct EntityFilter {
  EntityType type = EntityType::kAuthor;
  std::string id;
  bool negate = false;
  /// ANDed on its own instead of joining the OR group of its type, so that
  /// "papers by X and Y together" is expressible.
  bool required = false;

  bool operator==(const EntityFilter&) const = default;
};

struct YearRange {
  int min = 0;
  int max = 0;
  bool operator==(const YearRange&) const = default;
};

struct QueryParams {
  std::vector<EntityFilter> entity_filters;
  std::optional<YearRange> year_range;
  /// Applied between filter groups of different types; same-type filters OR.
  Connective connective = Connective::kAnd;
  int limit = 10;
  std::vector<ArticleMetric> metrics;
  /// Restricts the match set to explicit article ids (filled from
  /// `$stepK.article_ids` placeholders).
  std::vector<std::string> article_ids;
};

struct FacetRequest {
  EntityType facet_type = EntityType::kAuthor;
  int top_n = 10;
  std::vector<FacetMetric> metrics;
  /// Entity ids left out of the ranking (e.g. the author whose co-authors
  /// are being counted).
  std::vector<std::string> exclude_ids;
};

/// Boolean query tree over atomic predicates. Canonical trees are flattened
/// (no AND directly under AND, no OR under OR), have de-duplicated children
/// sorted by their serialized form, and contain no double negation.
struct QueryAst {
  enum class Kind { kAll, kEntity, kYear, kDoc, kNot, kAnd, kOr };

  Kind kind = Kind::kAll;
  EntityType type = EntityType::kAuthor;  // kEntity
  std::string id;                          // kEntity, kDoc
  int year_min = 0;                        // kYear
  int year_max = 0;                        // kYear
  std::vector<QueryAst> children;          // kNot (one), kAnd, kOr

  static QueryAst all() { return {}; }
  static QueryAst entity(EntityType t, std::string id);
  static QueryAst year(int lo, int hi);
  static QueryAst doc(std::string id);
  static QueryAst negation(QueryAst operand);
  static QueryAst conjunction(std::vector<QueryAst> children);
  static QueryAst disjunction(std::vector<QueryAst> children);

  bool operator==(const QueryAst&) const = default;
};

std::string serialize(const QueryAst& ast);
/// Parses the canonical grammar. Structure is preserved exactly; call
/// canonicalize() to normalize hand-written input.
QueryAst parse_query(std::string_view text);
QueryAst canonicalize(QueryAst ast);
bool is_canonical(const QueryAst& ast);

/// Pure assembly from typed parameters; always returns a canonical tree.
QueryAst build_query(const QueryParams& params);

/// Output of the lenient, rule-based assembler.
struct AssembledQuery {
  QueryParams params;
  std::optional<FacetRequest> facet;
  QueryAst ast;
  std::string query_string;
  std::vector<std::string> repair_log;
};

/// Assembles a query from raw tool arguments (as produced by a planner or a
/// tool call), repairing common mistakes and logging each repair.
///
/// Repairs: numeric strings become integers; entity names are resolved to ids
/// of the stated type; duplicate filters are dropped; unknown keys are dropped.
/// Throws Error(kAssembly) for unresolvable names, ids that belong to a
/// different entity type, and inverted year ranges; Error(kInvalidFacet) for
/// an unsupported facet type.
AssembledQuery build_query(const nlohmann::json& raw, const Corpus& corpus,
                           const EntityResolver& resolver, bool with_facet);

/// Strict, repair-free path: arguments are serialized directly into a query
/// string and parsed. Malformed arguments raise Error(kQuerySyntax) or
/// Error(kInvalidArguments); nothing is resolved or corrected.
AssembledQuery build_query_raw(const nlohmann::json& raw, bool with_facet);

std::string_view to_string(Connective c);

/// Plain ids are emitted bare; anything else is double-quoted with escapes.
bool is_plain_id(std::string_view id);

}  // namespace sqa
