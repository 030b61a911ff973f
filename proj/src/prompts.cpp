#include "sqa/prompts.hpp"

namespace sqa::prompts {

using nlohmann::json;

namespace {

json entity_types() {
  return json::array({"AUTHOR", "INSTITUTION", "VENUE", "TOPIC", "SUBJECT_AREA", "SDG"});
}

json common_properties() {
  json year = {{"type", json::array({"integer", "string"})}, {"pattern", R"(^\s*-?[0-9]{1,4}\s*$)"}};
  json filter = {
      {"type", "object"},
      {"required", json::array({"type"})},
      {"properties",
       {{"type", {{"type", "string"}, {"enum", entity_types()}}},
        {"id", {{"type", "string"}}},
        {"name", {{"type", "string"}}},
        {"negate", {{"type", "boolean"}}},
        {"required", {{"type", "boolean"}}}}}};
  return {{"filters", {{"type", "array"}, {"items", filter}}},
          {"year_range", {{"type", "object"}, {"properties", {{"min", year}, {"max", year}}}}},
          {"connective", {{"type", "string"}, {"enum", json::array({"AND", "OR"})}}},
          {"article_ids", {{"type", "array"}, {"items", {{"type", "string"}}}}}};
}

ToolSchema make_article_schema() {
  json props = common_properties();
  props["limit"] = {{"type", "integer"}, {"minimum", 1}};
  props["metrics"] = {{"type", "array"},
                      {"items", {{"type", "string"}, {"enum", json::array({"citation_count", "fwci"})}}}};
  return {kArticleSearch,
          "Find articles matching entity and year filters, most cited first.",
          {{"type", "object"}, {"properties", props}}};
}

ToolSchema make_facet_schema() {
  json props = common_properties();
  props["facet"] = {{"type", "string"}, {"enum", entity_types()}};
  props["top_n"] = {{"type", "integer"}, {"minimum", 1}};
  props["facet_metrics"] = {
      {"type", "array"},
      {"items",
       {{"type", "string"},
        {"enum", json::array({"document_count", "total_citations", "average_fwci"})}}}};
  props["exclude_ids"] = {{"type", "array"}, {"items", {{"type", "string"}}}};
  return {kFacetedSearch,
          "Filter articles, then rank the entities of one type attached to them by document count.",
          {{"type", "object"}, {"required", json::array({"facet"})}, {"properties", props}}};
}

const char* kContract = R"(Tools:
- article_search(filters, year_range, connective, limit, metrics, article_ids)
  Returns articles sorted by citation count. metrics may hold citation_count and fwci.
- faceted_article_search(filters, year_range, connective, facet, top_n, facet_metrics, exclude_ids)
  Groups the matching articles by the facet entity type and returns the top_n entities
  by document count. facet_metrics may hold document_count, total_citations, average_fwci.
filters is a list of {"type": <AUTHOR|INSTITUTION|VENUE|TOPIC|SUBJECT_AREA|SDG>, "id": <entity id>,
"negate": bool, "required": bool}. Filters of one type are alternatives unless "required" is set.
year_range is {"min": year, "max": year}. connective joins filters of different types.)";

}  // namespace

const ToolSchema& article_search_schema() {
  static const ToolSchema s = make_article_schema();
  return s;
}

const ToolSchema& faceted_search_schema() {
  static const ToolSchema s = make_facet_schema();
  return s;
}

std::vector<ToolSchema> planning_tools() { return {article_search_schema(), faceted_search_schema()}; }

const ToolSchema* find_tool(const std::string& name) {
  if (name == kArticleSearch) return &article_search_schema();
  if (name == kFacetedSearch) return &faceted_search_schema();
  return nullptr;
}

std::string hlpm_system() {
  return R"(You prepare bibliometric questions for a retrieval planner.
1. Tag every mention of an author, institution, venue, topic, subject area or SDG in the
   question. Copy the surface text exactly as written.
2. Write a short outline of the retrieval needed to answer, one step per line. Describe
   what to find in plain words. Do not name tools, parameters or ids.
Reply with one JSON object:
{"tags": [{"text": "...", "type": "AUTHOR|INSTITUTION|VENUE|TOPIC|SUBJECT_AREA|SDG"}],
 "outline": ["..."]})";
}

std::string dpm_system() {
  return std::string(R"(You turn an outline into a list of data retrieval steps.
)") + kContract + R"(

Each step is {"id": n, "tool": name, "subtask": text, "depends_on": [ids], "params": {...}}.
Number steps from 1. A step may depend only on earlier steps. When a parameter comes from an
earlier step, write a placeholder "$step<k>.<path>" and list k in depends_on. Paths:
top_entity_id, entity_ids, top_article_id, article_ids.
Use only the entity ids given with the question.

Example. Question: "Who is the most frequent co-author of X and how many papers do they share?"
Entities: X -> AUTHOR A1
{"steps": [
 {"id": 1, "tool": "faceted_article_search", "subtask": "rank co-authors of X", "depends_on": [],
  "params": {"filters": [{"type": "AUTHOR", "id": "A1"}], "facet": "AUTHOR", "top_n": 5,
             "exclude_ids": ["A1"], "facet_metrics": ["document_count"]}},
 {"id": 2, "tool": "article_search", "subtask": "papers shared with the top co-author",
  "depends_on": [1],
  "params": {"filters": [{"type": "AUTHOR", "id": "A1", "required": true},
                         {"type": "AUTHOR", "id": "$step1.top_entity_id", "required": true}],
             "limit": 50, "metrics": ["citation_count"]}}]}

Reply with one JSON object {"steps": [...]}.)";
}

std::string dependent_step_system() {
  return std::string(R"(You fill in the parameters of one retrieval step using results of earlier steps.
)") + kContract + R"(
Call exactly one tool. Take ids only from the results shown.)";
}

std::string baseline_system() {
  return std::string(R"(Answer the question by calling one data tool.
)") + kContract;
}

std::string compose_system() {
  return R"(Write the answer to the question using only the retrieved data provided.
Do not add facts that are not in the data. If something is missing, say so.
Structure:
## Summary
A few sentences with the main findings.
## Data
Markdown tables or lists with the retrieved values.
## Conclusion
## References
Link every entity and paper you mention as [Name](Type/ID), where Type is one of Author,
Institution, Venue, Topic, SubjectArea, SDG, Paper and ID is the id from the data.)";
}

std::string plot_decision_system() {
  return R"(Decide whether charts would help a reader of this answer.
Reply with one JSON object {"wanted": bool, "rationale": "...", "chart_types": [...]}
using chart types bar, grouped_bar, line, pie.)";
}

std::string chart_system() {
  return R"(Produce chart specifications from the retrieved data.
Reply with one JSON object {"charts": [spec...]} where a spec is
{"chart_type": "bar|grouped_bar|line|pie", "title": "...",
 "x": {"label": "...", "categories": ["..."]},
 "series": [{"label": "...", "values": [numbers]}], "source_step_ids": [ids]}.
Every value must be copied exactly from the data. Each series has one value per category.)";
}

std::string judge_system() {
  return R"(You grade an answer to a bibliometric question on one criterion.
Use the level descriptions given. Reply with one JSON object
{"score": <integer 1-5>, "confidence": <number between 0 and 1>}.)";
}

}  // namespace sqa::prompts
