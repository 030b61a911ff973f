#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqa/corpus.hpp"
#include "sqa/executor.hpp"
#include "sqa/llm.hpp"

namespace sqa {

/// An inline markdown link `[text](target)`, with target split as Type/ID
/// when it has that shape.
struct LinkRef {
  std::string text;
  std::string target;
  std::string type;  // empty when the target is not Type/ID
  std::string id;
  std::size_t begin = 0;  // byte span of the whole link
  std::size_t end = 0;

  bool operator==(const LinkRef& o) const { return type == o.type && id == o.id && text == o.text; }
};

struct StrippedRef {
  std::string link;
  std::string reason;
};

struct RefAudit {
  std::size_t total_refs = 0;
  std::size_t resolved_refs = 0;
  std::vector<StrippedRef> stripped_refs;
};

struct ComposedResponse {
  std::string markdown;
  std::vector<LinkRef> references;  // unique by (type, id), first occurrence order
  RefAudit audit;
  std::int64_t token_count = 0;
  bool no_data = false;
};

void to_json(nlohmann::json& j, const RefAudit& a);
void to_json(nlohmann::json& j, const ComposedResponse& r);

inline constexpr const char* kReasonNotRetrieved = "id not in retrieved data";
inline constexpr const char* kReasonUnsupported = "unsupported link target";

/// Every inline link in document order. Images and reference-style links are
/// not links for this purpose.
std::vector<LinkRef> extract_links(std::string_view markdown);

/// (Type, ID) pairs available for linking: entity and paper ids in the step
/// payloads. Entity types use link prefixes ("SubjectArea"), papers "Paper".
std::vector<std::pair<std::string, std::string>> trace_link_targets(const RunTrace& trace);

/// A link resolves iff (Type, ID) occurs in the trace payloads or, for
/// entity types, in the corpus entity table.
RefAudit verify_references(std::string_view markdown, const RunTrace& trace,
                           const Corpus* corpus = nullptr);

/// Replaces unresolved links by their text until none remain.
std::string strip_unresolved(std::string markdown, const RunTrace& trace, const Corpus* corpus,
                             RefAudit* audit);

std::string no_data_markdown(const std::string& question);

/// One model call over the question and serialized step results; the output
/// is audited and unresolved links are stripped. Without any ok step the
/// no-data response is returned and no model call is made. Throws
/// Error(kComposition) on refusal or empty output.
ComposedResponse compose(const std::string& question, const RunTrace& trace, Gateway& gateway,
                         const Corpus& corpus, CallLog* log = nullptr,
                         const std::string& profile = "utility_model");

}  // namespace sqa
