#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sqa/types.hpp"

namespace sqa {

using EntityIndex = std::uint32_t;
using ArticleIndex = std::uint32_t;

/// Interned article. Entity lists hold sorted, de-duplicated indices into the
/// corpus entity table, one list per entity type.
struct Article {
  std::string id;
  std::string title;
  int year = 0;
  std::int64_t citation_count = 0;
  std::array<std::vector<EntityIndex>, kEntityTypeCount> entities;
  std::vector<ArticleIndex> references;

  std::span<const EntityIndex> of(EntityType t) const { return entities[index_of(t)]; }
};

struct CorpusStats {
  std::size_t articles = 0;
  std::array<std::size_t, kEntityTypeCount> entities{};
  std::size_t references = 0;

  std::size_t count(EntityType t) const { return entities[index_of(t)]; }
  bool operator==(const CorpusStats&) const = default;
};

void to_json(nlohmann::json& j, const CorpusStats& s);

struct EntityAggregate {
  std::size_t document_count = 0;
  std::int64_t total_citations = 0;
  std::optional<double> average_fwci;
};

/// Field-weighted citation impact per article plus per-entity aggregates.
///
/// fwci(a) = mean over a's (subject_area, year) buckets of
///           citation_count(a) / mean citation_count of the bucket,
/// skipping buckets whose mean is zero; undefined when no bucket is usable.
struct MetricsIndex {
  std::vector<std::optional<double>> fwci;       // by ArticleIndex
  std::vector<EntityAggregate> entity;           // by EntityIndex
};

class Corpus;
MetricsIndex compute_metrics(const Corpus& corpus);

/// Immutable bibliometric knowledge base. Built once by ingestion, then safe
/// for unrestricted concurrent reads.
class Corpus {
 public:
  static Corpus load(const std::filesystem::path& path);
  /// `source_name` is used only in error messages.
  static Corpus parse(std::istream& in, std::string_view source_name = "<stream>");
  static Corpus parse(std::string_view text, std::string_view source_name = "<string>");

  const CorpusStats& stats() const { return stats_; }
  const MetricsIndex& metrics() const { return metrics_; }
  /// FNV-1a digest of the source bytes, hex encoded.
  const std::string& digest() const { return digest_; }

  std::span<const Article> articles() const { return articles_; }
  const Article& article(ArticleIndex i) const { return articles_[i]; }
  std::optional<ArticleIndex> find_article(std::string_view id) const;
  ArticleRecord record(ArticleIndex i) const;

  std::span<const EntityRef> entities() const { return entities_; }
  const EntityRef& entity(EntityIndex i) const { return entities_[i]; }
  std::optional<EntityIndex> find_entity(EntityType type, std::string_view id) const;
  /// Lookup that never fabricates: unknown (id, type) yields nullopt.
  std::optional<EntityRef> get_entity(std::string_view id, EntityType type) const;
  /// Every type under which `id` is registered.
  std::vector<EntityType> types_of(std::string_view id) const;
  std::span<const EntityIndex> entities_of_type(EntityType t) const {
    return by_type_[index_of(t)];
  }

  /// Inverted indices. Posting lists are sorted article indices.
  std::span<const ArticleIndex> postings(EntityIndex e) const { return postings_[e]; }
  std::span<const ArticleIndex> articles_in_year(int year) const;

 private:
  Corpus() = default;
  void finalize();

  std::vector<Article> articles_;
  std::vector<EntityRef> entities_;
  std::array<std::vector<EntityIndex>, kEntityTypeCount> by_type_;
  std::array<std::unordered_map<std::string, EntityIndex>, kEntityTypeCount> entity_ids_;
  std::unordered_map<std::string, ArticleIndex> article_ids_;
  std::vector<std::vector<ArticleIndex>> postings_;
  std::map<int, std::vector<ArticleIndex>> by_year_;
  CorpusStats stats_;
  MetricsIndex metrics_;
  std::string digest_;

  friend class CorpusBuilder;
};

/// Convenience: ingest and report statistics, the `ingest_corpus` operation.
CorpusStats ingest_corpus(const std::filesystem::path& path);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace sqa
