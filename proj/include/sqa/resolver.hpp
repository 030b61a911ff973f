#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sqa/corpus.hpp"
#include "sqa/types.hpp"

namespace sqa {

inline constexpr double kDefaultResolveThreshold = 0.4;
inline constexpr int kDefaultResolveTopK = 5;

/// Lowercases, folds Latin diacritics, strips punctuation and collapses
/// whitespace. Returns UTF-8.
std::string normalize_name(std::string_view s);

/// A normalized name prepared for trigram comparison.
struct NameKey {
  std::u32string text;                // normalized, as code points
  std::vector<std::uint64_t> grams;   // sorted, unique character trigrams
};

NameKey make_name_key(std::string_view raw);
double similarity(const NameKey& a, const NameKey& b);

/// Jaccard similarity of character-trigram sets over normalized strings.
/// Strings shorter than three characters compare by exact match.
double similarity(std::string_view a, std::string_view b);

struct Candidate {
  EntityRef entity;
  double score = 0.0;
  bool exact = false;
};

struct RankedCandidates {
  std::string query_name;
  EntityType type = EntityType::kAuthor;
  std::vector<Candidate> candidates;
  double threshold = kDefaultResolveThreshold;

  bool no_match() const { return candidates.empty(); }
};

void to_json(nlohmann::json& j, const RankedCandidates& r);

/// Name-to-id resolution over one corpus. Precomputes name keys for every
/// entity (name and aliases) once; lookups are read-only.
class EntityResolver {
 public:
  explicit EntityResolver(const Corpus& corpus);

  /// Throws Error(kInvalidInput) when `name` normalizes to nothing. An empty
  /// candidate list is the no-match signal.
  RankedCandidates resolve(std::string_view name, EntityType type,
                           int top_k = kDefaultResolveTopK,
                           double threshold = kDefaultResolveThreshold) const;

  const Corpus& corpus() const { return corpus_; }
  /// Keys for entity `e`: index 0 is the display name, the rest aliases.
  const std::vector<NameKey>& keys(EntityIndex e) const { return keys_[e]; }

 private:
  const Corpus& corpus_;
  std::vector<std::vector<NameKey>> keys_;
};

}  // namespace sqa
