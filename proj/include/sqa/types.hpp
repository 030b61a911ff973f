#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sqa {

/// Academic entity types that questions may reference directly. Articles are
/// the data unit and are deliberately not part of this set.
enum class EntityType : std::uint8_t {
  kAuthor,
  kInstitution,
  kVenue,
  kTopic,
  kSubjectArea,
  kSdg,
};

inline constexpr std::array<EntityType, 6> kAllEntityTypes = {
    EntityType::kAuthor, EntityType::kInstitution, EntityType::kVenue,
    EntityType::kTopic,  EntityType::kSubjectArea, EntityType::kSdg};

inline constexpr std::size_t kEntityTypeCount = kAllEntityTypes.size();

constexpr std::size_t index_of(EntityType t) { return static_cast<std::size_t>(t); }

/// Canonical upper-case name, e.g. "SUBJECT_AREA".
std::string_view to_string(EntityType t);
std::optional<EntityType> entity_type_from_string(std::string_view s);

/// Link-target prefix used in composed markdown, e.g. "SubjectArea".
std::string_view link_prefix(EntityType t);

/// Snake-case field name in the corpus file, e.g. "subject_areas".
std::string_view corpus_field(EntityType t);

struct EntityRef {
  std::string id;
  EntityType type = EntityType::kAuthor;
  std::string name;
  std::vector<std::string> aliases;

  bool operator==(const EntityRef&) const = default;
};

struct ArticleRecord {
  std::string id;
  std::string title;
  int year = 0;
  std::vector<EntityRef> authors;
  std::optional<EntityRef> venue;
  std::vector<EntityRef> institutions;
  std::vector<EntityRef> topics;
  std::vector<EntityRef> subject_areas;
  std::vector<EntityRef> sdgs;
  std::int64_t citation_count = 0;
  std::vector<std::string> references;
};

enum class ArticleMetric { kCitationCount, kFwci };
enum class FacetMetric { kDocumentCount, kTotalCitations, kAverageFwci };

std::string_view to_string(ArticleMetric m);
std::string_view to_string(FacetMetric m);
std::optional<ArticleMetric> article_metric_from_string(std::string_view s);
std::optional<FacetMetric> facet_metric_from_string(std::string_view s);

}  // namespace sqa
