#include "sqa/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sqa/error.hpp"
#include "sqa/kernels.hpp"

namespace sqa {

using nlohmann::json;

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

void to_json(json& j, const CorpusStats& s) {
  j = json{{"articles", s.articles}, {"references", s.references}};
  json ents = json::object();
  for (EntityType t : kAllEntityTypes) {
    ents[std::string(corpus_field(t))] = s.count(t);
  }
  j["entities"] = std::move(ents);
}

class CorpusBuilder {
 public:
  explicit CorpusBuilder(std::string_view source) : source_(source) {}

  void add_line(std::size_t line_no, std::string_view line);
  Corpus finish(std::string digest);

 private:
  struct PendingEntity {
    bool defined = false;
    std::size_t first_line = 0;
  };

  [[noreturn]] void fail(std::size_t line_no, const std::string& msg) const {
    throw Error(ErrorCode::kIngestion,
                std::string(source_) + ":" + std::to_string(line_no) + ": " + msg);
  }

  EntityIndex intern(std::size_t line_no, EntityType type, const json& item);

  std::string_view source_;
  Corpus corpus_;
  std::vector<PendingEntity> pending_;
  std::vector<std::vector<std::string>> raw_refs_;
  std::vector<std::size_t> article_lines_;
};

EntityIndex CorpusBuilder::intern(std::size_t line_no, EntityType type, const json& item) {
  std::string id;
  const json* obj = nullptr;
  if (item.is_string()) {
    id = item.get<std::string>();
  } else if (item.is_object()) {
    auto it = item.find("id");
    if (it == item.end() || !it->is_string()) {
      fail(line_no, std::string(corpus_field(type)) + " entry without string id");
    }
    id = it->get<std::string>();
    obj = &item;
  } else {
    fail(line_no, std::string(corpus_field(type)) + " entry must be an object or id string");
  }
  if (id.empty()) fail(line_no, "empty entity id in " + std::string(corpus_field(type)));

  auto& ids = corpus_.entity_ids_[index_of(type)];
  auto [it, inserted] = ids.try_emplace(id, static_cast<EntityIndex>(corpus_.entities_.size()));
  if (inserted) {
    EntityRef ref;
    ref.id = id;
    ref.type = type;
    corpus_.entities_.push_back(std::move(ref));
    pending_.push_back({false, line_no});
  }
  EntityIndex idx = it->second;
  if (obj != nullptr) {
    EntityRef& ref = corpus_.entities_[idx];
    auto name = obj->find("name");
    if (name != obj->end()) {
      if (!name->is_string()) fail(line_no, "entity " + id + ": name must be a string");
      if (!pending_[idx].defined) {
        ref.name = name->get<std::string>();
        pending_[idx].defined = true;
      }
    }
    auto aliases = obj->find("aliases");
    if (aliases != obj->end()) {
      if (!aliases->is_array()) fail(line_no, "entity " + id + ": aliases must be an array");
      for (const auto& a : *aliases) {
        if (!a.is_string()) fail(line_no, "entity " + id + ": alias must be a string");
        auto s = a.get<std::string>();
        if (std::find(ref.aliases.begin(), ref.aliases.end(), s) == ref.aliases.end()) {
          ref.aliases.push_back(std::move(s));
        }
      }
    }
  }
  return idx;
}

void CorpusBuilder::add_line(std::size_t line_no, std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    fail(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail(line_no, "record must be a JSON object");

  Article a;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
    fail(line_no, "missing or non-string \"id\"");
  }
  a.id = id->get<std::string>();
  if (corpus_.article_ids_.count(a.id) != 0) fail(line_no, "duplicate article id " + a.id);

  auto title = j.find("title");
  if (title == j.end() || !title->is_string()) fail(line_no, "missing or non-string \"title\"");
  a.title = title->get<std::string>();

  auto year = j.find("year");
  if (year == j.end() || !year->is_number_integer()) fail(line_no, "missing or non-integer \"year\"");
  a.year = year->get<int>();
  if (a.year < 1500 || a.year > 2100) fail(line_no, "year out of range [1500, 2100]");

  auto cites = j.find("citation_count");
  if (cites == j.end() || !cites->is_number_integer()) {
    fail(line_no, "missing or non-integer \"citation_count\"");
  }
  a.citation_count = cites->get<std::int64_t>();
  if (a.citation_count < 0) fail(line_no, "negative citation_count");

  for (EntityType t : kAllEntityTypes) {
    auto f = j.find(std::string(corpus_field(t)));
    if (f == j.end() || f->is_null()) continue;
    auto& list = a.entities[index_of(t)];
    if (t == EntityType::kVenue) {
      list.push_back(intern(line_no, t, *f));
      continue;
    }
    if (!f->is_array()) fail(line_no, "\"" + std::string(corpus_field(t)) + "\" must be an array");
    for (const auto& item : *f) list.push_back(intern(line_no, t, item));
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }

  std::vector<std::string> refs;
  auto r = j.find("references");
  if (r != j.end() && !r->is_null()) {
    if (!r->is_array()) fail(line_no, "\"references\" must be an array");
    for (const auto& ref : *r) {
      if (!ref.is_string()) fail(line_no, "reference ids must be strings");
      auto s = ref.get<std::string>();
      if (s == a.id) fail(line_no, "article " + a.id + " references itself");
      refs.push_back(std::move(s));
    }
  }

  corpus_.article_ids_.emplace(a.id, static_cast<ArticleIndex>(corpus_.articles_.size()));
  corpus_.articles_.push_back(std::move(a));
  raw_refs_.push_back(std::move(refs));
  article_lines_.push_back(line_no);
}

Corpus CorpusBuilder::finish(std::string digest) {
  std::vector<std::string> offenders;
  for (std::size_t e = 0; e < pending_.size(); ++e) {
    if (!pending_[e].defined) {
      const auto& ref = corpus_.entities_[e];
      offenders.push_back(std::string(to_string(ref.type)) + ":" + ref.id + " (line " +
                          std::to_string(pending_[e].first_line) + ")");
    }
  }
  for (std::size_t i = 0; i < raw_refs_.size(); ++i) {
    auto& out = corpus_.articles_[i].references;
    for (const auto& id : raw_refs_[i]) {
      auto it = corpus_.article_ids_.find(id);
      if (it == corpus_.article_ids_.end()) {
        offenders.push_back("reference " + id + " (line " + std::to_string(article_lines_[i]) + ")");
        continue;
      }
      out.push_back(it->second);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  if (!offenders.empty()) {
    std::string msg = std::string(source_) + ": dangling ids: ";
    for (std::size_t i = 0; i < offenders.size(); ++i) {
      if (i) msg += ", ";
      msg += offenders[i];
    }
    throw Error(ErrorCode::kIngestion, msg);
  }
  corpus_.digest_ = std::move(digest);
  corpus_.finalize();
  return std::move(corpus_);
}

void Corpus::finalize() {
  postings_.assign(entities_.size(), {});
  for (auto& v : by_type_) v.clear();
  for (EntityIndex e = 0; e < entities_.size(); ++e) {
    by_type_[index_of(entities_[e].type)].push_back(e);
  }
  stats_ = {};
  stats_.articles = articles_.size();
  for (ArticleIndex i = 0; i < articles_.size(); ++i) {
    const Article& a = articles_[i];
    for (const auto& list : a.entities) {
      for (EntityIndex e : list) postings_[e].push_back(i);
    }
    by_year_[a.year].push_back(i);
    stats_.references += a.references.size();
  }
  for (EntityType t : kAllEntityTypes) stats_.entities[index_of(t)] = by_type_[index_of(t)].size();
  metrics_ = kernels::compute_metrics_parallel(*this);
}

Corpus Corpus::parse(std::string_view text, std::string_view source_name) {
  CorpusBuilder b(source_name);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    bool blank = std::all_of(line.begin(), line.end(),
                             [](char c) { return c == ' ' || c == '\t'; });
    if (!blank) b.add_line(line_no, line);
    pos = nl + 1;
  }
  return b.finish(fnv1a_hex(text));
}

Corpus Corpus::parse(std::istream& in, std::string_view source_name) {
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(std::string_view(ss.str()), source_name);
}

Corpus Corpus::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIngestion, "cannot open corpus file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  return parse(std::string_view(text), path.string());
}

CorpusStats ingest_corpus(const std::filesystem::path& path) { return Corpus::load(path).stats(); }

std::optional<ArticleIndex> Corpus::find_article(std::string_view id) const {
  auto it = article_ids_.find(std::string(id));
  if (it == article_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<EntityIndex> Corpus::find_entity(EntityType type, std::string_view id) const {
  const auto& ids = entity_ids_[index_of(type)];
  auto it = ids.find(std::string(id));
  if (it == ids.end()) return std::nullopt;
  return it->second;
}

std::optional<EntityRef> Corpus::get_entity(std::string_view id, EntityType type) const {
  auto idx = find_entity(type, id);
  if (!idx) return std::nullopt;
  return entities_[*idx];
}

std::vector<EntityType> Corpus::types_of(std::string_view id) const {
  std::vector<EntityType> out;
  for (EntityType t : kAllEntityTypes) {
    if (find_entity(t, id)) out.push_back(t);
  }
  return out;
}

std::span<const ArticleIndex> Corpus::articles_in_year(int year) const {
  auto it = by_year_.find(year);
  if (it == by_year_.end()) return {};
  return it->second;
}

ArticleRecord Corpus::record(ArticleIndex i) const {
  const Article& a = articles_[i];
  ArticleRecord r;
  r.id = a.id;
  r.title = a.title;
  r.year = a.year;
  r.citation_count = a.citation_count;
  auto fill = [&](EntityType t, std::vector<EntityRef>& out) {
    for (EntityIndex e : a.of(t)) out.push_back(entities_[e]);
  };
  fill(EntityType::kAuthor, r.authors);
  fill(EntityType::kInstitution, r.institutions);
  fill(EntityType::kTopic, r.topics);
  fill(EntityType::kSubjectArea, r.subject_areas);
  fill(EntityType::kSdg, r.sdgs);
  if (!a.of(EntityType::kVenue).empty()) r.venue = entities_[a.of(EntityType::kVenue)[0]];
  for (ArticleIndex ref : a.references) r.references.push_back(articles_[ref].id);
  return r;
}

MetricsIndex compute_metrics(const Corpus& corpus) { return kernels::compute_metrics_parallel(corpus); }

}  // namespace sqa
