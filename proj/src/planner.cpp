#include "sqa/planner.hpp"

#include <algorithm>
#include <queue>
#include <regex>
#include <set>

#include <spdlog/spdlog.h>

#include "sqa/error.hpp"
#include "sqa/prompts.hpp"
#include "sqa/schema.hpp"

namespace sqa {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Plan JSON

Plan plan_from_json(const json& j) {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kPlannerParse, m); };
  const json* steps = nullptr;
  if (j.is_object() && j.contains("steps")) {
    steps = &j["steps"];
  } else if (j.is_array()) {
    steps = &j;
  } else {
    bad("plan must be an object with a \"steps\" list");
  }
  if (!steps->is_array()) bad("\"steps\" must be a list");
  Plan plan;
  for (std::size_t i = 0; i < steps->size(); ++i) {
    const json& s = (*steps)[i];
    std::string at = "step #" + std::to_string(i + 1);
    if (!s.is_object()) bad(at + " must be an object");
    PlanStep step;
    if (!s.contains("id") || !s["id"].is_number_integer()) bad(at + ": \"id\" must be an integer");
    step.id = s["id"].get<int>();
    if (!s.contains("tool") || !s["tool"].is_string()) bad(at + ": \"tool\" must be a string");
    step.tool = s["tool"].get<std::string>();
    step.subtask = s.value("subtask", "");
    if (s.contains("depends_on")) {
      if (!s["depends_on"].is_array()) bad(at + ": \"depends_on\" must be a list");
      for (const auto& d : s["depends_on"]) {
        if (!d.is_number_integer()) bad(at + ": \"depends_on\" must hold step ids");
        step.depends_on.push_back(d.get<int>());
      }
    }
    if (s.contains("params")) {
      if (!s["params"].is_object()) bad(at + ": \"params\" must be an object");
      step.params = s["params"];
    }
    plan.steps.push_back(std::move(step));
  }
  if (j.is_object() && j.contains("resolved_entities") && j["resolved_entities"].is_object()) {
    for (auto it = j["resolved_entities"].begin(); it != j["resolved_entities"].end(); ++it) {
      EntityRef e;
      e.id = it->value("id", "");
      e.name = it->value("name", "");
      auto t = entity_type_from_string(it->value("type", ""));
      if (!t) bad("resolved entity \"" + it.key() + "\" has no valid type");
      e.type = *t;
      plan.resolved_entities[it.key()] = e;
    }
  }
  return plan;
}

json to_json(const Plan& plan) {
  json steps = json::array();
  for (const auto& s : plan.steps) {
    steps.push_back({{"id", s.id},
                     {"tool", s.tool},
                     {"subtask", s.subtask},
                     {"depends_on", s.depends_on},
                     {"params", s.params}});
  }
  json res = json::object();
  for (const auto& [k, e] : plan.resolved_entities) {
    res[k] = {{"id", e.id}, {"type", to_string(e.type)}, {"name", e.name}};
  }
  return {{"steps", steps}, {"resolved_entities", res}};
}

void to_json(json& j, const ValidationReport& r) {
  j = json::object();
  j["ok"] = r.ok();
  j["violations"] = json::array();
  for (const auto& v : r.violations) {
    j["violations"].push_back({{"step", v.step}, {"rule", v.rule}, {"message", v.message}});
  }
  j["warnings"] = r.warnings;
}

void to_json(json& j, const HlpmResult& r) {
  json tags = json::array();
  for (const auto& t : r.tagged.tags) {
    tags.push_back({{"text", t.text}, {"type", to_string(t.type)}, {"span", {t.begin, t.end}}});
  }
  json res = json::array();
  for (const auto& x : r.resolutions) {
    json e{{"surface", x.surface}, {"type", to_string(x.type)}};
    if (x.entity) {
      e["id"] = x.entity->id;
      e["name"] = x.entity->name;
    } else {
      e["unresolved"] = true;
    }
    if (!x.alternatives.empty()) {
      e["alternatives"] = json::array();
      for (const auto& c : x.alternatives) e["alternatives"].push_back(c.entity.id);
    }
    res.push_back(std::move(e));
  }
  j = {{"question", r.tagged.question},
       {"tags", tags},
       {"outline", r.tagged.outline},
       {"resolutions", res},
       {"warnings", r.tagged.warnings}};
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void collect_strings(const json& v, std::vector<std::string>& out) {
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array() || v.is_object()) {
    for (const auto& x : v) collect_strings(x, out);
  }
}

int placeholder_step(const std::string& s) {
  // s is known to match the placeholder pattern
  return std::stoi(s.substr(5, s.find('.') - 5));
}

}  // namespace

ValidationReport validate_plan(const Plan& plan, const Corpus* corpus) {
  ValidationReport rep;
  auto add = [&](int step, const char* rule, std::string msg) {
    rep.violations.push_back({step, rule, std::move(msg)});
  };
  if (plan.steps.empty()) {
    rep.warnings.push_back("plan has no steps");
    return rep;
  }

  std::set<int> ids;
  for (const auto& s : plan.steps) ids.insert(s.id);

  std::set<int> seen;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const PlanStep& s = plan.steps[i];
    const int pos = static_cast<int>(i) + 1;
    if (s.id != pos) {
      add(s.id, rules::kStepId, "step at position " + std::to_string(pos) + " has id " + std::to_string(s.id));
    }
    if (!seen.insert(s.id).second) add(s.id, rules::kDuplicateId, "duplicate step id");

    const ToolSchema* tool = prompts::find_tool(s.tool);
    if (tool == nullptr) add(s.id, rules::kUnknownTool, "unknown tool \"" + s.tool + "\"");

    for (int d : s.depends_on) {
      if (d == s.id) {
        add(s.id, rules::kSelfDependency, "step depends on itself");
      } else if (!ids.count(d)) {
        add(s.id, rules::kDanglingDependency, "dependency " + std::to_string(d) + " does not exist");
      } else if (d > s.id) {
        add(s.id, rules::kForwardDependency, "dependency " + std::to_string(d) + " is a later step");
      }
    }

    std::vector<std::string> strings;
    collect_strings(s.params, strings);
    for (const auto& str : strings) {
      if (str.empty() || str[0] != '$') continue;
      if (!is_placeholder(str)) {
        add(s.id, rules::kMalformedPlaceholder, "malformed placeholder \"" + str + "\"");
        continue;
      }
      int k = placeholder_step(str);
      if (std::find(s.depends_on.begin(), s.depends_on.end(), k) == s.depends_on.end()) {
        add(s.id, rules::kPlaceholderDependency,
            "placeholder \"" + str + "\" references step " + std::to_string(k) + " not in depends_on");
      }
    }

    if (tool != nullptr) {
      for (const auto& e : validate_json(s.params, tool->parameters, true)) {
        add(s.id, rules::kParamSchema, e);
      }
    }

    if (corpus != nullptr && s.params.contains("filters") && s.params["filters"].is_array()) {
      for (const auto& f : s.params["filters"]) {
        if (!f.is_object() || !f.contains("id") || !f["id"].is_string()) continue;
        if (!f.contains("type") || !f["type"].is_string()) continue;
        auto id = f["id"].get<std::string>();
        auto type = entity_type_from_string(f["type"].get<std::string>());
        if (!type || id.empty() || id[0] == '$') continue;
        if (corpus->find_entity(*type, id)) continue;
        bool resolved = std::any_of(plan.resolved_entities.begin(), plan.resolved_entities.end(),
                                    [&](const auto& kv) {
                                      return kv.second.id == id && kv.second.type == *type;
                                    });
        if (resolved) continue;
        auto other = corpus->types_of(id);
        if (!other.empty()) {
          add(s.id, rules::kEntityTypeConflation,
              "id " + id + " is a " + std::string(to_string(other[0])) + " id, not " +
                  std::string(to_string(*type)));
        } else {
          add(s.id, rules::kUnknownEntity, "unknown " + std::string(to_string(*type)) + " id " + id);
        }
      }
    }
  }

  // Kahn over step positions; edges d -> s for existing, non-self deps.
  const std::size_t n = plan.steps.size();
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<int> indeg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d : plan.steps[i].depends_on) {
      if (d == plan.steps[i].id) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (plan.steps[j].id == d) {
          out[j].push_back(i);
          ++indeg[i];
        }
      }
    }
  }
  std::queue<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push(i);
  }
  std::vector<bool> done(n, false);
  while (!ready.empty()) {
    auto i = ready.front();
    ready.pop();
    done[i] = true;
    for (auto j : out[i]) {
      if (--indeg[j] == 0) ready.push(j);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!done[i]) add(plan.steps[i].id, rules::kCycle, "step is on or behind a dependency cycle");
  }

  std::stable_sort(rep.violations.begin(), rep.violations.end(),
                   [](const Violation& a, const Violation& b) { return a.step < b.step; });
  return rep;
}

// ---------------------------------------------------------------------------
// HLPM

bool outline_line_leaks(const std::string& line) {
  static const std::regex re(
      R"((article_search|faceted_article_search|year_range|depends_on|top_n|facet_metrics|article_ids|exclude_ids|\$step[0-9]|"[a-z_]+"\s*:))",
      std::regex::icase);
  return std::regex_search(line, re);
}

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

struct HlpmParse {
  std::vector<std::string> problems;
  std::vector<std::pair<std::string, std::string>> raw_tags;  // text, type
  std::vector<std::string> outline;
};

HlpmParse parse_hlpm(const std::string& text) {
  HlpmParse p;
  auto j = extract_json_object(text);
  if (!j) {
    p.problems.push_back("reply is not a JSON object");
    return p;
  }
  if (!j->contains("tags") || !(*j)["tags"].is_array()) {
    p.problems.push_back("\"tags\" must be a list");
  } else {
    for (const auto& t : (*j)["tags"]) {
      if (!t.is_object() || !t.contains("text") || !t["text"].is_string() || !t.contains("type") ||
          !t["type"].is_string()) {
        p.problems.push_back("tag " + t.dump() + " must be {\"text\", \"type\"}");
        continue;
      }
      p.raw_tags.emplace_back(t["text"].get<std::string>(), t["type"].get<std::string>());
    }
  }
  if (!j->contains("outline") || !(*j)["outline"].is_array()) {
    p.problems.push_back("\"outline\" must be a list of strings");
  } else {
    for (const auto& o : (*j)["outline"]) {
      if (!o.is_string()) {
        p.problems.push_back("outline entries must be strings");
        continue;
      }
      auto line = o.get<std::string>();
      if (outline_line_leaks(line)) {
        p.problems.push_back("outline line \"" + line + "\" names a tool or parameter");
      }
      p.outline.push_back(std::move(line));
    }
  }
  return p;
}

}  // namespace

HlpmResult hlpm(const std::string& question, Gateway& gateway, const EntityResolver& resolver,
                CallLog* log, const std::string& profile) {
  if (question.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::kInvalidInput, "question is empty");
  }
  ChatRequest req;
  req.purpose = "hlpm";
  req.system_prompt = prompts::hlpm_system();
  req.messages.push_back({Role::kUser, "Question: " + question});
  req.response_format = ResponseFormat::kJsonObject;
  req.max_tokens = 1024;

  HlpmParse parsed;
  for (int round = 0; round < 2; ++round) {
    Completion c = gateway.chat(profile, req, log);
    parsed = parse_hlpm(c.text);
    if (parsed.problems.empty()) break;
    if (round == 1) {
      std::string msg = "HLPM output rejected:";
      for (const auto& p : parsed.problems) msg += " " + p + ";";
      throw Error(ErrorCode::kPlannerParse, msg);
    }
    std::string fb = "Your reply could not be used:\n";
    for (const auto& p : parsed.problems) fb += "- " + p + "\n";
    fb += "Reply again with the JSON object only.";
    req.messages.push_back({Role::kAssistant, c.text});
    req.messages.push_back({Role::kUser, fb});
  }

  HlpmResult out;
  TaggedQuestion& tq = out.tagged;
  tq.question = question;
  tq.outline = parsed.outline;

  const std::string lq = lower(question);
  std::vector<Tag> found;
  std::set<std::pair<std::string, EntityType>> dedupe;
  for (const auto& [text, type_name] : parsed.raw_tags) {
    auto type = entity_type_from_string(type_name);
    if (!type) {
      tq.warnings.push_back("tag \"" + text + "\" dropped: unsupported type " + type_name);
      continue;
    }
    if (text.empty() || !dedupe.insert({text, *type}).second) continue;
    auto pos = question.find(text);
    if (pos == std::string::npos) pos = lq.find(lower(text));
    if (pos == std::string::npos) {
      tq.warnings.push_back("tag \"" + text + "\" dropped: not found in the question");
      continue;
    }
    found.push_back({question.substr(pos, text.size()), *type, pos, pos + text.size()});
  }
  // Overlapping spans: keep the longer one.
  std::stable_sort(found.begin(), found.end(), [](const Tag& a, const Tag& b) {
    if (a.end - a.begin != b.end - b.begin) return a.end - a.begin > b.end - b.begin;
    return a.begin < b.begin;
  });
  for (const auto& t : found) {
    bool overlaps = std::any_of(tq.tags.begin(), tq.tags.end(),
                                [&](const Tag& k) { return t.begin < k.end && k.begin < t.end; });
    if (overlaps) {
      tq.warnings.push_back("tag \"" + t.text + "\" dropped: overlaps a longer tag");
      continue;
    }
    tq.tags.push_back(t);
  }
  std::sort(tq.tags.begin(), tq.tags.end(), [](const Tag& a, const Tag& b) { return a.begin < b.begin; });

  for (const auto& t : tq.tags) {
    Resolution r;
    r.surface = t.text;
    r.type = t.type;
    auto rc = resolver.resolve(t.text, t.type);
    if (rc.no_match()) {
      tq.warnings.push_back("no " + std::string(to_string(t.type)) + " matches \"" + t.text + "\"");
    } else {
      r.entity = rc.candidates[0].entity;
      for (std::size_t i = 1; i < rc.candidates.size(); ++i) {
        if (rc.candidates[i].score == rc.candidates[0].score) {
          tq.warnings.push_back("\"" + t.text + "\" is ambiguous: " + rc.candidates[0].entity.id +
                                " and " + rc.candidates[i].entity.id + " score equally");
        }
        r.alternatives.push_back(rc.candidates[i]);
      }
    }
    out.resolutions.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// DPM

namespace {

std::string dpm_user_message(const HlpmResult& h) {
  std::string m = "Question: " + h.tagged.question + "\nEntities:\n";
  if (h.resolutions.empty()) m += "- none\n";
  for (const auto& r : h.resolutions) {
    m += "- " + r.surface + " -> " + std::string(to_string(r.type)) + " ";
    m += r.entity ? r.entity->id + " (" + r.entity->name + ")" : std::string("UNRESOLVED");
    m += "\n";
  }
  m += "Outline:\n";
  for (std::size_t i = 0; i < h.tagged.outline.size(); ++i) {
    m += std::to_string(i + 1) + ". " + h.tagged.outline[i] + "\n";
  }
  return m;
}

}  // namespace

Plan dpm(const HlpmResult& h, Gateway& gateway, const Corpus& corpus, CallLog* log,
         const std::string& profile) {
  ChatRequest req;
  req.purpose = "dpm";
  req.system_prompt = prompts::dpm_system();
  req.messages.push_back({Role::kUser, dpm_user_message(h)});
  req.response_format = ResponseFormat::kJsonObject;
  req.max_tokens = 2048;

  for (int round = 0; round < 2; ++round) {
    Completion c = gateway.chat(profile, req, log);
    std::vector<std::string> problems;
    Plan plan;
    if (auto j = extract_json_object(c.text)) {
      try {
        plan = plan_from_json(*j);
      } catch (const Error& e) {
        problems.push_back(e.what());
      }
    } else {
      problems.push_back("reply is not a JSON object");
    }
    if (problems.empty()) {
      for (const auto& r : h.resolutions) {
        if (r.entity) plan.resolved_entities[r.surface] = *r.entity;
      }
      auto report = validate_plan(plan, &corpus);
      for (const auto& v : report.violations) {
        problems.push_back("step " + std::to_string(v.step) + ": " + v.rule + ": " + v.message);
      }
      for (const auto& w : report.warnings) spdlog::debug("dpm: {}", w);
      if (problems.empty()) return plan;
    }
    if (round == 1) {
      std::string msg = "plan rejected after repair:";
      for (const auto& p : problems) msg += " " + p + ";";
      throw Error(ErrorCode::kInvalidPlan, msg);
    }
    std::string fb = "The plan failed validation:\n";
    for (const auto& p : problems) fb += "- " + p + "\n";
    fb += "Reply with a corrected {\"steps\": [...]} object.";
    req.messages.push_back({Role::kAssistant, c.text});
    req.messages.push_back({Role::kUser, fb});
  }
  throw Error(ErrorCode::kInvalidPlan, "unreachable");
}

}  // namespace sqa
