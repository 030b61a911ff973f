#pragma once

#include <string>
#include <vector>

#include "sqa/llm.hpp"

namespace sqa::prompts {

inline constexpr const char* kArticleSearch = "article_search";
inline constexpr const char* kFacetedSearch = "faceted_article_search";

/// The two tools exposed for planning and tool calls.
const ToolSchema& article_search_schema();
const ToolSchema& faceted_search_schema();
std::vector<ToolSchema> planning_tools();
const ToolSchema* find_tool(const std::string& name);

std::string hlpm_system();
std::string dpm_system();
std::string dependent_step_system();
std::string baseline_system();
std::string compose_system();
std::string plot_decision_system();
std::string chart_system();
std::string judge_system();

}  // namespace sqa::prompts
