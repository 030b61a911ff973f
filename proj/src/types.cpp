#include "sqa/types.hpp"

#include <algorithm>
#include <cctype>

#include "sqa/error.hpp"

namespace sqa {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIngestion: return "ingestion";
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kAssembly: return "assembly";
    case ErrorCode::kInvalidFacet: return "invalid-facet";
    case ErrorCode::kQuerySyntax: return "query-syntax";
    case ErrorCode::kProviderUnavailable: return "provider-unavailable";
    case ErrorCode::kEmptyCompletion: return "empty-completion";
    case ErrorCode::kInvalidTool: return "invalid-tool";
    case ErrorCode::kInvalidArguments: return "invalid-arguments";
    case ErrorCode::kPlannerParse: return "planner-parse";
    case ErrorCode::kInvalidPlan: return "invalid-plan";
    case ErrorCode::kEmptyDependency: return "empty-dependency";
    case ErrorCode::kComposition: return "composition";
    case ErrorCode::kSampling: return "sampling";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

std::string_view to_string(EntityType t) {
  switch (t) {
    case EntityType::kAuthor: return "AUTHOR";
    case EntityType::kInstitution: return "INSTITUTION";
    case EntityType::kVenue: return "VENUE";
    case EntityType::kTopic: return "TOPIC";
    case EntityType::kSubjectArea: return "SUBJECT_AREA";
    case EntityType::kSdg: return "SDG";
  }
  return "?";
}

std::optional<EntityType> entity_type_from_string(std::string_view s) {
  std::string up;
  up.reserve(s.size());
  for (char c : s) {
    if (c == ' ' || c == '-') {
      up.push_back('_');
    } else {
      up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
  }
  for (EntityType t : kAllEntityTypes) {
    if (up == to_string(t)) return t;
  }
  return std::nullopt;
}

std::string_view link_prefix(EntityType t) {
  switch (t) {
    case EntityType::kAuthor: return "Author";
    case EntityType::kInstitution: return "Institution";
    case EntityType::kVenue: return "Venue";
    case EntityType::kTopic: return "Topic";
    case EntityType::kSubjectArea: return "SubjectArea";
    case EntityType::kSdg: return "SDG";
  }
  return "?";
}

std::string_view corpus_field(EntityType t) {
  switch (t) {
    case EntityType::kAuthor: return "authors";
    case EntityType::kInstitution: return "institutions";
    case EntityType::kVenue: return "venue";
    case EntityType::kTopic: return "topics";
    case EntityType::kSubjectArea: return "subject_areas";
    case EntityType::kSdg: return "sdgs";
  }
  return "?";
}

std::string_view to_string(ArticleMetric m) {
  return m == ArticleMetric::kCitationCount ? "citation_count" : "fwci";
}

std::string_view to_string(FacetMetric m) {
  switch (m) {
    case FacetMetric::kDocumentCount: return "document_count";
    case FacetMetric::kTotalCitations: return "total_citations";
    case FacetMetric::kAverageFwci: return "average_fwci";
  }
  return "?";
}

std::optional<ArticleMetric> article_metric_from_string(std::string_view s) {
  if (s == "citation_count") return ArticleMetric::kCitationCount;
  if (s == "fwci") return ArticleMetric::kFwci;
  return std::nullopt;
}

std::optional<FacetMetric> facet_metric_from_string(std::string_view s) {
  if (s == "document_count") return FacetMetric::kDocumentCount;
  if (s == "total_citations") return FacetMetric::kTotalCitations;
  if (s == "average_fwci") return FacetMetric::kAverageFwci;
  return std::nullopt;
}

}  // namespace sqa
