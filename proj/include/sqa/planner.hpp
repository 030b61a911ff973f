#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqa/corpus.hpp"
#include "sqa/llm.hpp"
#include "sqa/resolver.hpp"
#include "sqa/types.hpp"

namespace sqa {

struct Tag {
  std::string text;
  EntityType type = EntityType::kAuthor;
  std::size_t begin = 0;  // byte offsets into the question, [begin, end)
  std::size_t end = 0;
};

struct TaggedQuestion {
  std::string question;
  std::vector<Tag> tags;
  std::vector<std::string> outline;
  std::vector<std::string> warnings;
};

/// Resolution of one tag. `entity` is empty for the explicit unresolved
/// marker; `alternatives` keeps the remaining candidates (homonyms).
struct Resolution {
  std::string surface;
  EntityType type = EntityType::kAuthor;
  std::optional<EntityRef> entity;
  std::vector<Candidate> alternatives;
};

struct HlpmResult {
  TaggedQuestion tagged;
  std::vector<Resolution> resolutions;  // in tag order
};

struct PlanStep {
  int id = 0;
  std::string tool;
  std::string subtask;
  std::vector<int> depends_on;
  nlohmann::json params = nlohmann::json::object();
};

struct Plan {
  std::vector<PlanStep> steps;
  std::map<std::string, EntityRef> resolved_entities;  // surface text -> entity
};

struct Violation {
  int step = 0;  // 0 for plan-level findings
  std::string rule;
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

/// Rule names used in Violation::rule.
namespace rules {
inline constexpr const char* kStepId = "step_id";
inline constexpr const char* kDuplicateId = "duplicate_id";
inline constexpr const char* kUnknownTool = "unknown_tool";
inline constexpr const char* kDanglingDependency = "dangling_dependency";
inline constexpr const char* kSelfDependency = "self_dependency";
inline constexpr const char* kForwardDependency = "forward_dependency";
inline constexpr const char* kCycle = "cycle";
inline constexpr const char* kMalformedPlaceholder = "malformed_placeholder";
inline constexpr const char* kPlaceholderDependency = "placeholder_dependency";
inline constexpr const char* kParamSchema = "param_schema";
inline constexpr const char* kUnknownEntity = "unknown_entity";
inline constexpr const char* kEntityTypeConflation = "entity_type_conflation";
}  // namespace rules

/// Checks acyclicity (Kahn), the closed tool set, dependency integrity,
/// placeholder/dependency consistency, parameter schemas and, when a corpus
/// is given, entity-id existence. Never throws.
ValidationReport validate_plan(const Plan& plan, const Corpus* corpus = nullptr);

/// Throws Error(kPlannerParse) when the JSON does not have the plan shape.
Plan plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Plan& plan);
void to_json(nlohmann::json& j, const ValidationReport& r);
void to_json(nlohmann::json& j, const HlpmResult& r);

/// True when an outline line names a tool, a parameter key or a placeholder.
bool outline_line_leaks(const std::string& line);

/// NER + outline with one model call, then resolution without any model call.
HlpmResult hlpm(const std::string& question, Gateway& gateway, const EntityResolver& resolver,
                CallLog* log = nullptr, const std::string& profile = "utility_model");

/// Detailed plan from one model call, validated; one repair round.
Plan dpm(const HlpmResult& hlpm, Gateway& gateway, const Corpus& corpus, CallLog* log = nullptr,
         const std::string& profile = "planner_model");

}  // namespace sqa
