#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqa/corpus.hpp"
#include "sqa/llm.hpp"
#include "sqa/planner.hpp"
#include "sqa/query.hpp"
#include "sqa/resolver.hpp"
#include "sqa/search.hpp"

namespace sqa {

enum class StepStatus { kOk, kEmpty, kFailed };
std::string_view to_string(StepStatus s);

struct StepPayload {
  std::optional<ArticleResultSet> articles;
  std::optional<FacetResultSet> facets;

  std::size_t rows() const;
  bool has_value() const { return articles.has_value() || facets.has_value(); }
  nlohmann::json to_json() const;
};

struct StepResult {
  int step_id = 0;
  std::string tool;
  std::string subtask;
  std::vector<int> depends_on;
  nlohmann::json params;          // after substitution or inference
  std::string assembled_query;    // canonical string, empty unless assembled
  StepPayload payload;
  StepStatus status = StepStatus::kFailed;
  std::string error;
  std::vector<std::string> cause_chain;  // errors of failed upstream steps
  std::vector<std::string> warnings;
  bool llm_inferred = false;
  std::int64_t start_us = 0;  // relative to the start of the run
  std::int64_t end_us = 0;

  nlohmann::json to_json(bool with_timings = true) const;
};

struct RunTrace {
  std::string mode = "workflow";  // workflow | baseline
  std::string question;
  std::optional<Plan> plan;
  std::map<int, StepResult> steps;
  std::int64_t wall_us = 0;
  CallLog calls;
  std::vector<std::string> warnings;

  std::size_t ok_steps() const;
  nlohmann::json to_json(bool with_timings = true) const;
};

/// Executes one tool against an assembled query.
class ToolBackend {
 public:
  virtual ~ToolBackend() = default;
  virtual StepPayload invoke(const std::string& tool, const AssembledQuery& query) = 0;
};

class LocalToolBackend : public ToolBackend {
 public:
  explicit LocalToolBackend(const Corpus& corpus) : corpus_(corpus) {}
  StepPayload invoke(const std::string& tool, const AssembledQuery& query) override;

 private:
  const Corpus& corpus_;
};

/// A placeholder path that cannot be filled mechanically.
class InferenceNeeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Replaces `$stepK.<path>` strings in the step params with values from
/// prior results. Paths: top_entity_id, entity_ids (facet results),
/// top_article_id, article_ids (article results). A filter whose id becomes
/// a list is expanded into one filter per id.
///
/// Throws Error(kEmptyDependency) when a referenced result has no rows and
/// InferenceNeeded for any other path.
nlohmann::json substitute_placeholders(const PlanStep& step, const std::map<int, StepResult>& prior);

struct ExecutorOptions {
  int max_concurrency = 8;
  /// When set, ready steps are picked in a seeded random order and each
  /// step sleeps a seeded random delay before running.
  std::optional<std::uint64_t> jitter_seed;
  int max_jitter_us = 3000;
  std::string profile = "utility_model";
};

class Executor {
 public:
  Executor(const Corpus& corpus, const EntityResolver& resolver, ToolBackend& backend,
           Gateway* gateway, ExecutorOptions options = {});

  /// Runs every step once. A step starts only after all of its dependencies
  /// have finished; steps whose dependency failed are failed without running.
  RunTrace execute(const Plan& plan, CallLog* log = nullptr) const;

  StepResult run_step(const PlanStep& step, const std::map<int, StepResult>& prior,
                      CallLog* log) const;

 private:
  const Corpus& corpus_;
  const EntityResolver& resolver_;
  ToolBackend& backend_;
  Gateway* gateway_;
  ExecutorOptions options_;
};

/// The naive pipeline: one tool call over both tool schemas with the raw
/// question, arguments serialized without any rule-based repair.
RunTrace run_baseline(const std::string& question, Gateway& gateway, ToolBackend& backend,
                      CallLog* log = nullptr, const std::string& profile = "utility_model");

}  // namespace sqa
