#include "sqa/composer.hpp"

#include <algorithm>
#include <set>

#include "sqa/error.hpp"
#include "sqa/prompts.hpp"

namespace sqa {

using nlohmann::json;

void to_json(json& j, const RefAudit& a) {
  json stripped = json::array();
  for (const auto& s : a.stripped_refs) stripped.push_back({{"link", s.link}, {"reason", s.reason}});
  j = {{"total_refs", a.total_refs}, {"resolved_refs", a.resolved_refs}, {"stripped_refs", stripped}};
}

void to_json(json& j, const ComposedResponse& r) {
  json refs = json::array();
  for (const auto& l : r.references) refs.push_back({{"text", l.text}, {"type", l.type}, {"id", l.id}});
  j = {{"markdown", r.markdown},
       {"references", refs},
       {"audit", r.audit},
       {"token_count", r.token_count},
       {"no_data", r.no_data}};
}

namespace {

const std::set<std::string>& link_types() {
  static const std::set<std::string> kTypes = {"Author", "Institution", "Venue",  "Topic",
                                               "SubjectArea", "SDG",     "Paper"};
  return kTypes;
}

}  // namespace

std::vector<LinkRef> extract_links(std::string_view md) {
  std::vector<LinkRef> out;
  std::size_t i = 0;
  while (i < md.size()) {
    if (md[i] != '[' || (i > 0 && md[i - 1] == '!') || (i > 0 && md[i - 1] == '\\')) {
      ++i;
      continue;
    }
    // Innermost bracket run: text may not contain '[' or ']'.
    std::size_t close = i + 1;
    while (close < md.size() && md[close] != ']' && md[close] != '[' && md[close] != '\n') ++close;
    if (close >= md.size() || md[close] != ']') {
      i = close;
      continue;
    }
    if (close + 1 >= md.size() || md[close + 1] != '(') {
      i = close + 1;
      continue;
    }
    std::size_t paren = close + 2;
    std::size_t end = paren;
    while (end < md.size() && md[end] != ')' && md[end] != '\n' && md[end] != ' ') ++end;
    if (end >= md.size() || md[end] != ')') {
      i = close + 1;
      continue;
    }
    LinkRef l;
    l.text = std::string(md.substr(i + 1, close - i - 1));
    l.target = std::string(md.substr(paren, end - paren));
    l.begin = i;
    l.end = end + 1;
    auto slash = l.target.find('/');
    if (slash != std::string::npos && slash > 0 && slash + 1 < l.target.size()) {
      std::string type = l.target.substr(0, slash);
      if (link_types().count(type)) {
        l.type = type;
        l.id = l.target.substr(slash + 1);
      }
    }
    out.push_back(std::move(l));
    i = end + 1;
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> trace_link_targets(const RunTrace& trace) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [id, s] : trace.steps) {
    if (s.payload.articles) {
      for (const auto& row : s.payload.articles->rows) seen.insert({"Paper", row.id});
    }
    if (s.payload.facets) {
      for (const auto& row : s.payload.facets->rows) {
        seen.insert({std::string(link_prefix(row.type)), row.id});
      }
    }
  }
  return {seen.begin(), seen.end()};
}

namespace {

struct Resolver {
  std::set<std::pair<std::string, std::string>> in_trace;
  const Corpus* corpus;

  // Empty string when resolved, otherwise the reason.
  std::string check(const LinkRef& l) const {
    if (l.type.empty()) return kReasonUnsupported;
    if (in_trace.count({l.type, l.id})) return "";
    if (corpus != nullptr && l.type != "Paper") {
      for (EntityType t : kAllEntityTypes) {
        if (link_prefix(t) == l.type && corpus->find_entity(t, l.id)) return "";
      }
    }
    return kReasonNotRetrieved;
  }
};

Resolver make_resolver(const RunTrace& trace, const Corpus* corpus) {
  auto v = trace_link_targets(trace);
  return {{v.begin(), v.end()}, corpus};
}

}  // namespace

RefAudit verify_references(std::string_view markdown, const RunTrace& trace, const Corpus* corpus) {
  Resolver r = make_resolver(trace, corpus);
  RefAudit a;
  for (const auto& l : extract_links(markdown)) {
    ++a.total_refs;
    auto reason = r.check(l);
    if (reason.empty()) {
      ++a.resolved_refs;
    } else {
      a.stripped_refs.push_back({"[" + l.text + "](" + l.target + ")", reason});
    }
  }
  return a;
}

std::string strip_unresolved(std::string md, const RunTrace& trace, const Corpus* corpus,
                             RefAudit* audit) {
  Resolver r = make_resolver(trace, corpus);
  std::vector<StrippedRef> stripped;
  while (true) {
    auto links = extract_links(md);
    bool changed = false;
    for (auto it = links.rbegin(); it != links.rend(); ++it) {
      auto reason = r.check(*it);
      if (reason.empty()) continue;
      stripped.push_back({"[" + it->text + "](" + it->target + ")", reason});
      md.replace(it->begin, it->end - it->begin, it->text);
      changed = true;
    }
    if (!changed) break;
  }
  if (audit != nullptr) {
    // Stripped links were found back to front within each pass.
    audit->stripped_refs = std::move(stripped);
    audit->resolved_refs = extract_links(md).size();
    audit->total_refs = audit->resolved_refs + audit->stripped_refs.size();
  }
  return md;
}

std::string no_data_markdown(const std::string& question) {
  return "## Summary\n"
         "No data was retrieved for this question, so no answer can be given from the knowledge "
         "base.\n\n"
         "## Details\n"
         "Question: " + question + "\n\n"
         "Every retrieval step failed or returned no rows. Check the entity names and filters, "
         "or rephrase the question.\n";
}

ComposedResponse compose(const std::string& question, const RunTrace& trace, Gateway& gateway,
                         const Corpus& corpus, CallLog* log, const std::string& profile) {
  ComposedResponse out;
  if (trace.ok_steps() == 0) {
    out.markdown = no_data_markdown(question);
    out.no_data = true;
    return out;
  }

  json data = json::array();
  for (const auto& [id, s] : trace.steps) {
    json j{{"step", id}, {"subtask", s.subtask}, {"tool", s.tool}, {"status", to_string(s.status)}};
    if (s.status == StepStatus::kFailed) {
      j["error"] = s.error;
    } else {
      j["query"] = s.assembled_query;
      j["result"] = s.payload.to_json();
    }
    data.push_back(std::move(j));
  }
  ChatRequest req;
  req.purpose = "compose";
  req.system_prompt = prompts::compose_system();
  req.messages.push_back({Role::kUser, "Question: " + question + "\nRetrieved data:\n" + data.dump(1)});
  req.max_tokens = 4096;

  Completion c;
  try {
    c = gateway.chat(profile, req, log);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kEmptyCompletion) throw Error(ErrorCode::kComposition, e.what());
    throw;
  }
  out.token_count = c.usage.completion_tokens;
  out.markdown = strip_unresolved(c.text, trace, &corpus, &out.audit);

  std::set<std::pair<std::string, std::string>> seen;
  for (auto& l : extract_links(out.markdown)) {
    if (seen.insert({l.type, l.id}).second) out.references.push_back(std::move(l));
  }
  return out;
}

}  // namespace sqa
