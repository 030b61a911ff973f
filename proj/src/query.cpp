#include "sqa/query.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include "sqa/corpus.hpp"
#include "sqa/error.hpp"
#include "sqa/resolver.hpp"

namespace sqa {

using nlohmann::json;

QueryAst QueryAst::entity(EntityType t, std::string id) {
  QueryAst a;
  a.kind = Kind::kEntity;
  a.type = t;
  a.id = std::move(id);
  return a;
}

QueryAst QueryAst::year(int lo, int hi) {
  QueryAst a;
  a.kind = Kind::kYear;
  a.year_min = lo;
  a.year_max = hi;
  return a;
}

QueryAst QueryAst::doc(std::string id) {
  QueryAst a;
  a.kind = Kind::kDoc;
  a.id = std::move(id);
  return a;
}

QueryAst QueryAst::negation(QueryAst operand) {
  QueryAst a;
  a.kind = Kind::kNot;
  a.children.push_back(std::move(operand));
  return a;
}

QueryAst QueryAst::conjunction(std::vector<QueryAst> children) {
  QueryAst a;
  a.kind = Kind::kAnd;
  a.children = std::move(children);
  return a;
}

QueryAst QueryAst::disjunction(std::vector<QueryAst> children) {
  QueryAst a;
  a.kind = Kind::kOr;
  a.children = std::move(children);
  return a;
}

std::string_view to_string(Connective c) { return c == Connective::kAnd ? "AND" : "OR"; }

bool is_plain_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || c == '.' || c == ':' || c == '/' || c == '-';
  });
}

namespace {

void write_id(std::string& out, std::string_view id) {
  if (is_plain_id(id)) {
    out += id;
    return;
  }
  out.push_back('"');
  for (char c : id) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
}

bool is_compound(const QueryAst& a) {
  return a.kind == QueryAst::Kind::kAnd || a.kind == QueryAst::Kind::kOr;
}

void write(std::string& out, const QueryAst& a) {
  switch (a.kind) {
    case QueryAst::Kind::kAll:
      out += "ALL";
      return;
    case QueryAst::Kind::kEntity:
      out += to_string(a.type);
      out.push_back('(');
      write_id(out, a.id);
      out.push_back(')');
      return;
    case QueryAst::Kind::kYear:
      out += "PUBYEAR(" + std::to_string(a.year_min) + ".." + std::to_string(a.year_max) + ")";
      return;
    case QueryAst::Kind::kDoc:
      out += "DOC(";
      write_id(out, a.id);
      out.push_back(')');
      return;
    case QueryAst::Kind::kNot: {
      out += "NOT ";
      const QueryAst& c = a.children.at(0);
      if (is_compound(c)) out.push_back('(');
      write(out, c);
      if (is_compound(c)) out.push_back(')');
      return;
    }
    case QueryAst::Kind::kAnd:
    case QueryAst::Kind::kOr: {
      const char* op = a.kind == QueryAst::Kind::kAnd ? " AND " : " OR ";
      for (std::size_t i = 0; i < a.children.size(); ++i) {
        if (i) out += op;
        const QueryAst& c = a.children[i];
        if (is_compound(c)) out.push_back('(');
        write(out, c);
        if (is_compound(c)) out.push_back(')');
      }
      return;
    }
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  QueryAst run() {
    QueryAst a = parse_or();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return a;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::kQuerySyntax,
                "query syntax error at offset " + std::to_string(pos_) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  // Matches a keyword followed by a non-identifier character.
  bool keyword(std::string_view kw) {
    skip_ws();
    if (s_.substr(pos_, kw.size()) != kw) return false;
    std::size_t end = pos_ + kw.size();
    if (end < s_.size()) {
      auto c = static_cast<unsigned char>(s_[end]);
      if (std::isalnum(c) || c == '_') return false;
    }
    pos_ = end;
    return true;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  QueryAst parse_or() {
    std::vector<QueryAst> kids;
    kids.push_back(parse_and());
    while (keyword("OR")) kids.push_back(parse_and());
    if (kids.size() == 1) return std::move(kids[0]);
    return QueryAst::disjunction(std::move(kids));
  }

  QueryAst parse_and() {
    std::vector<QueryAst> kids;
    kids.push_back(parse_unary());
    while (keyword("AND")) kids.push_back(parse_unary());
    if (kids.size() == 1) return std::move(kids[0]);
    return QueryAst::conjunction(std::move(kids));
  }

  QueryAst parse_unary() {
    if (keyword("NOT")) return QueryAst::negation(parse_unary());
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      QueryAst inner = parse_or();
      expect(')');
      return inner;
    }
    if (keyword("ALL")) return QueryAst::all();
    if (keyword("PUBYEAR")) {
      expect('(');
      int lo = parse_int();
      skip_ws();
      if (s_.substr(pos_, 2) != "..") fail("expected '..'");
      pos_ += 2;
      int hi = parse_int();
      expect(')');
      return QueryAst::year(lo, hi);
    }
    if (keyword("DOC")) {
      expect('(');
      std::string id = parse_id();
      expect(')');
      return QueryAst::doc(std::move(id));
    }
    for (EntityType t : kAllEntityTypes) {
      if (keyword(to_string(t))) {
        expect('(');
        std::string id = parse_id();
        expect(')');
        return QueryAst::entity(t, std::move(id));
      }
    }
    fail("expected a predicate");
  }

  int parse_int() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < s_.size() && s_[pos_] == '-') ++pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    int v = 0;
    auto [p, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (ec != std::errc() || p != s_.data() + pos_ || pos_ == start) {
      pos_ = start;
      fail("expected an integer year");
    }
    return v;
  }

  std::string parse_id() {
    skip_ws();
    std::string out;
    if (pos_ < s_.size() && s_[pos_] == '"') {
      ++pos_;
      while (true) {
        if (pos_ >= s_.size()) fail("unterminated quoted id");
        char c = s_[pos_++];
        if (c == '"') break;
        if (c == '\\') {
          if (pos_ >= s_.size()) fail("dangling escape");
          c = s_[pos_++];
        }
        out.push_back(c);
      }
      return out;
    }
    std::size_t start = pos_;
    while (pos_ < s_.size()) {
      auto c = static_cast<unsigned char>(s_[pos_]);
      if (!(std::isalnum(c) || c == '_' || c == '.' || c == ':' || c == '/' || c == '-')) break;
      // ".." is only meaningful inside PUBYEAR; ids may still contain dots.
      ++pos_;
    }
    if (pos_ == start) fail("expected an id");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const QueryAst& ast) {
  std::string out;
  write(out, ast);
  return out;
}

QueryAst parse_query(std::string_view text) { return Parser(text).run(); }

QueryAst canonicalize(QueryAst a) {
  using K = QueryAst::Kind;
  if (a.kind == K::kNot) {
    QueryAst inner = canonicalize(std::move(a.children.at(0)));
    if (inner.kind == K::kNot) return std::move(inner.children[0]);
    return QueryAst::negation(std::move(inner));
  }
  if (a.kind != K::kAnd && a.kind != K::kOr) return a;

  std::vector<QueryAst> flat;
  for (auto& c : a.children) {
    QueryAst cc = canonicalize(std::move(c));
    if (cc.kind == a.kind) {
      for (auto& g : cc.children) flat.push_back(std::move(g));
    } else if (cc.kind == K::kAll) {
      if (a.kind == K::kOr) return QueryAst::all();
      // ALL is the identity of AND
    } else {
      flat.push_back(std::move(cc));
    }
  }
  std::vector<std::pair<std::string, QueryAst>> keyed;
  keyed.reserve(flat.size());
  for (auto& c : flat) keyed.emplace_back(serialize(c), std::move(c));
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  keyed.erase(std::unique(keyed.begin(), keyed.end(),
                          [](const auto& x, const auto& y) { return x.first == y.first; }),
              keyed.end());
  if (keyed.empty()) return QueryAst::all();
  if (keyed.size() == 1) return std::move(keyed[0].second);
  a.children.clear();
  for (auto& [k, c] : keyed) a.children.push_back(std::move(c));
  return a;
}

bool is_canonical(const QueryAst& ast) { return canonicalize(ast) == ast; }

QueryAst build_query(const QueryParams& params) {
  std::vector<QueryAst> groups;
  std::vector<QueryAst> exclusions;
  for (EntityType t : kAllEntityTypes) {
    std::vector<QueryAst> same;
    for (const auto& f : params.entity_filters) {
      if (f.type != t) continue;
      if (f.negate) {
        exclusions.push_back(QueryAst::negation(QueryAst::entity(t, f.id)));
      } else if (f.required) {
        exclusions.push_back(QueryAst::entity(t, f.id));
      } else {
        same.push_back(QueryAst::entity(t, f.id));
      }
    }
    if (same.size() == 1) {
      groups.push_back(std::move(same[0]));
    } else if (!same.empty()) {
      groups.push_back(QueryAst::disjunction(std::move(same)));
    }
  }
  std::vector<QueryAst> top;
  if (!groups.empty()) {
    if (groups.size() == 1) {
      top.push_back(std::move(groups[0]));
    } else if (params.connective == Connective::kAnd) {
      for (auto& g : groups) top.push_back(std::move(g));
    } else {
      top.push_back(QueryAst::disjunction(std::move(groups)));
    }
  }
  for (auto& e : exclusions) top.push_back(std::move(e));
  if (params.year_range) {
    top.push_back(QueryAst::year(params.year_range->min, params.year_range->max));
  }
  if (!params.article_ids.empty()) {
    std::vector<QueryAst> docs;
    for (const auto& id : params.article_ids) docs.push_back(QueryAst::doc(id));
    top.push_back(QueryAst::disjunction(std::move(docs)));
  }
  return canonicalize(QueryAst::conjunction(std::move(top)));
}

// ---------------------------------------------------------------------------
// Lenient assembler

namespace {

const std::set<std::string>& known_keys(bool with_facet) {
  static const std::set<std::string> kSearch = {"filters",  "year_range", "connective",
                                                "limit",    "metrics",    "article_ids"};
  static const std::set<std::string> kFacet = {"filters", "year_range",  "connective",
                                               "facet",   "top_n",       "facet_metrics",
                                               "metrics", "article_ids", "limit",
                                               "exclude_ids"};
  return with_facet ? kFacet : kSearch;
}

[[noreturn]] void assembly_error(const std::string& msg) { throw Error(ErrorCode::kAssembly, msg); }

std::optional<int> lenient_int(const json& v, const std::string& what,
                               std::vector<std::string>& log) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (d == static_cast<double>(static_cast<int>(d))) {
      log.push_back(what + ": float " + v.dump() + " converted to integer");
      return static_cast<int>(d);
    }
    return std::nullopt;
  }
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return std::nullopt;
    std::string_view t(s.data() + b, e - b + 1);
    int out = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || p != t.data() + t.size()) return std::nullopt;
    log.push_back(what + ": numeric string \"" + s + "\" parsed as " + std::to_string(out));
    return out;
  }
  return std::nullopt;
}

std::string describe(const json& filter) { return filter.dump(); }

std::vector<std::string> string_list(const json& v, const std::string& what) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
    return out;
  }
  if (!v.is_array()) assembly_error(what + " must be a list of strings");
  for (const auto& x : v) {
    if (!x.is_string()) assembly_error(what + " must be a list of strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

}  // namespace

AssembledQuery build_query(const json& raw, const Corpus& corpus, const EntityResolver& resolver,
                           bool with_facet) {
  if (!raw.is_object()) assembly_error("tool arguments must be a JSON object");
  AssembledQuery out;
  auto& log = out.repair_log;
  const auto& keys = known_keys(with_facet);
  for (auto it = raw.begin(); it != raw.end(); ++it) {
    if (keys.count(it.key()) == 0) log.push_back("dropped unknown parameter \"" + it.key() + "\"");
  }

  QueryParams& p = out.params;
  if (auto f = raw.find("filters"); f != raw.end() && !f->is_null()) {
    if (!f->is_array()) assembly_error("filters must be a list");
    for (const auto& item : *f) {
      if (!item.is_object()) assembly_error("filter " + describe(item) + " must be an object");
      auto ty = item.find("type");
      auto id = item.find("id");
      if (ty == item.end() || !ty->is_string()) {
        assembly_error("filter " + describe(item) + " has no entity type");
      }
      if (id == item.end()) id = item.find("name");
      if (id == item.end() || !id->is_string() || id->get<std::string>().empty()) {
        assembly_error("filter " + describe(item) + " has no id");
      }
      std::string type_name = ty->get<std::string>();
      auto type = entity_type_from_string(type_name);
      if (!type) {
        assembly_error("filter " + describe(item) + ": unsupported entity type \"" + type_name + "\"");
      }
      if (type_name != to_string(*type)) {
        log.push_back("filter type \"" + type_name + "\" normalized to " + std::string(to_string(*type)));
      }
      EntityFilter ef;
      ef.type = *type;
      ef.id = id->get<std::string>();
      if (auto n = item.find("negate"); n != item.end()) {
        if (n->is_boolean()) {
          ef.negate = n->get<bool>();
        } else if (n->is_string() && (*n == "true" || *n == "false")) {
          ef.negate = *n == "true";
          log.push_back("filter " + describe(item) + ": negate string parsed as boolean");
        } else {
          assembly_error("filter " + describe(item) + ": negate must be a boolean");
        }
      }
      if (auto r = item.find("required"); r != item.end()) {
        if (!r->is_boolean()) assembly_error("filter " + describe(item) + ": required must be a boolean");
        ef.required = r->get<bool>();
      }
      if (!corpus.find_entity(ef.type, ef.id)) {
        auto other = corpus.types_of(ef.id);
        if (!other.empty()) {
          assembly_error("filter " + describe(item) + ": id " + ef.id + " is a " +
                         std::string(to_string(other[0])) + " id, not " +
                         std::string(to_string(ef.type)));
        }
        RankedCandidates rc;
        try {
          rc = resolver.resolve(ef.id, ef.type);
        } catch (const Error&) {
          assembly_error("filter " + describe(item) + ": unresolvable entity name");
        }
        if (rc.no_match()) {
          assembly_error("filter " + describe(item) + ": unresolvable entity \"" + ef.id + "\"");
        }
        log.push_back("filter " + std::string(to_string(ef.type)) + " name \"" + ef.id +
                      "\" resolved to id " + rc.candidates[0].entity.id);
        ef.id = rc.candidates[0].entity.id;
      }
      bool dup = std::find(p.entity_filters.begin(), p.entity_filters.end(), ef) !=
                 p.entity_filters.end();
      if (dup) {
        log.push_back("duplicate filter " + std::string(to_string(ef.type)) + "(" + ef.id + ") dropped");
        continue;
      }
      p.entity_filters.push_back(std::move(ef));
    }
  }

  if (auto y = raw.find("year_range"); y != raw.end() && !y->is_null()) {
    json lo;
    json hi;
    if (y->is_object()) {
      lo = y->value("min", json());
      hi = y->value("max", json());
    } else if (y->is_array() && y->size() == 2) {
      lo = (*y)[0];
      hi = (*y)[1];
    } else if (y->is_number_integer() || y->is_string()) {
      lo = *y;
      hi = *y;
    } else {
      assembly_error("year_range " + y->dump() + " must be {min, max}");
    }
    YearRange yr{1500, 2100};
    if (!lo.is_null()) {
      auto v = lenient_int(lo, "year_range.min", log);
      if (!v) assembly_error("year_range.min " + lo.dump() + " is not a year");
      yr.min = *v;
    }
    if (!hi.is_null()) {
      auto v = lenient_int(hi, "year_range.max", log);
      if (!v) assembly_error("year_range.max " + hi.dump() + " is not a year");
      yr.max = *v;
    }
    if (yr.min > yr.max) {
      assembly_error("inverted year_range " + std::to_string(yr.min) + ".." + std::to_string(yr.max));
    }
    p.year_range = yr;
  }

  if (auto c = raw.find("connective"); c != raw.end() && !c->is_null()) {
    std::string s = c->is_string() ? c->get<std::string>() : "";
    for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (s == "AND") {
      p.connective = Connective::kAnd;
    } else if (s == "OR") {
      p.connective = Connective::kOr;
    } else {
      assembly_error("connective " + c->dump() + " must be AND or OR");
    }
  }

  if (auto l = raw.find("limit"); l != raw.end() && !l->is_null()) {
    auto v = lenient_int(*l, "limit", log);
    if (!v || *v < 1) assembly_error("limit " + l->dump() + " must be a positive integer");
    p.limit = *v;
  }

  if (auto m = raw.find("metrics"); m != raw.end() && !m->is_null()) {
    for (const auto& name : string_list(*m, "metrics")) {
      auto am = article_metric_from_string(name);
      if (!am) {
        if (with_facet && facet_metric_from_string(name)) {
          log.push_back("metric \"" + name + "\" moved to facet_metrics");
          continue;
        }
        log.push_back("dropped unknown metric \"" + name + "\"");
        continue;
      }
      if (std::find(p.metrics.begin(), p.metrics.end(), *am) == p.metrics.end()) {
        p.metrics.push_back(*am);
      }
    }
  }

  if (auto a = raw.find("article_ids"); a != raw.end() && !a->is_null()) {
    for (auto& id : string_list(*a, "article_ids")) {
      if (std::find(p.article_ids.begin(), p.article_ids.end(), id) == p.article_ids.end()) {
        p.article_ids.push_back(std::move(id));
      }
    }
  }

  if (with_facet) {
    FacetRequest fr;
    auto f = raw.find("facet");
    if (f == raw.end() || !f->is_string()) throw Error(ErrorCode::kInvalidFacet, "facet type missing");
    auto ft = entity_type_from_string(f->get<std::string>());
    if (!ft) {
      throw Error(ErrorCode::kInvalidFacet,
                  "unsupported facet type \"" + f->get<std::string>() + "\"");
    }
    fr.facet_type = *ft;
    if (auto t = raw.find("top_n"); t != raw.end() && !t->is_null()) {
      auto v = lenient_int(*t, "top_n", log);
      if (!v || *v < 1) assembly_error("top_n " + t->dump() + " must be a positive integer");
      fr.top_n = *v;
    }
    if (auto m = raw.find("facet_metrics"); m != raw.end() && !m->is_null()) {
      for (const auto& name : string_list(*m, "facet_metrics")) {
        auto fm = facet_metric_from_string(name);
        if (!fm) {
          log.push_back("dropped unknown facet metric \"" + name + "\"");
          continue;
        }
        if (std::find(fr.metrics.begin(), fr.metrics.end(), *fm) == fr.metrics.end()) {
          fr.metrics.push_back(*fm);
        }
      }
    }
    if (auto m = raw.find("metrics"); m != raw.end() && m->is_array()) {
      for (const auto& name : *m) {
        if (!name.is_string()) continue;
        auto fm = facet_metric_from_string(name.get<std::string>());
        if (fm && std::find(fr.metrics.begin(), fr.metrics.end(), *fm) == fr.metrics.end()) {
          fr.metrics.push_back(*fm);
        }
      }
    }
    if (auto x = raw.find("exclude_ids"); x != raw.end() && !x->is_null()) {
      fr.exclude_ids = string_list(*x, "exclude_ids");
    }
    out.facet = fr;
  }

  out.ast = build_query(p);
  out.query_string = serialize(out.ast);
  return out;
}

AssembledQuery build_query_raw(const json& raw, bool with_facet) {
  if (!raw.is_object()) throw Error(ErrorCode::kInvalidArguments, "tool arguments must be an object");
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidArguments, m); };
  auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };

  std::vector<std::string> parts;
  if (auto f = raw.find("filters"); f != raw.end() && !f->is_null()) {
    if (!f->is_array()) bad("filters must be a list");
    std::map<std::string, std::vector<std::string>> by_type;
    std::vector<std::string> order;
    for (const auto& item : *f) {
      if (!item.is_object() || !item.contains("type") || !item.contains("id")) {
        bad("malformed filter " + item.dump());
      }
      std::string type = text(item["type"]);
      std::string id = text(item["id"]);
      std::string atom = type + "(" + id + ")";
      if (item.value("negate", false) == true) atom = "NOT " + atom;
      if (item.value("required", false) == true) {
        parts.push_back(atom);
        continue;
      }
      if (!by_type.count(type)) order.push_back(type);
      by_type[type].push_back(atom);
    }
    for (const auto& t : order) {
      const auto& atoms = by_type[t];
      std::string group;
      for (std::size_t i = 0; i < atoms.size(); ++i) group += (i ? " OR " : "") + atoms[i];
      parts.push_back(atoms.size() > 1 ? "(" + group + ")" : group);
    }
  }
  if (auto y = raw.find("year_range"); y != raw.end() && !y->is_null()) {
    if (!y->is_object()) bad("year_range must be an object");
    parts.push_back("PUBYEAR(" + text(y->value("min", json(1500))) + ".." +
                    text(y->value("max", json(2100))) + ")");
  }
  std::string query;
  for (std::size_t i = 0; i < parts.size(); ++i) query += (i ? " AND " : "") + parts[i];
  if (query.empty()) query = "ALL";

  AssembledQuery out;
  out.ast = parse_query(query);
  out.query_string = query;
  if (auto l = raw.find("limit"); l != raw.end()) {
    if (!l->is_number_integer() || l->get<int>() < 1) bad("limit must be a positive integer");
    out.params.limit = l->get<int>();
  }
  if (auto m = raw.find("metrics"); m != raw.end() && m->is_array()) {
    for (const auto& x : *m) {
      if (!x.is_string()) continue;
      if (auto am = article_metric_from_string(x.get<std::string>())) out.params.metrics.push_back(*am);
    }
  }
  if (with_facet) {
    auto f = raw.find("facet");
    if (f == raw.end() || !f->is_string()) throw Error(ErrorCode::kInvalidFacet, "facet type missing");
    auto ft = entity_type_from_string(f->get<std::string>());
    if (!ft || f->get<std::string>() != to_string(*ft)) {
      throw Error(ErrorCode::kInvalidFacet, "unsupported facet type \"" + f->get<std::string>() + "\"");
    }
    FacetRequest fr;
    fr.facet_type = *ft;
    if (auto t = raw.find("top_n"); t != raw.end()) {
      if (!t->is_number_integer() || t->get<int>() < 1) bad("top_n must be a positive integer");
      fr.top_n = t->get<int>();
    }
    if (auto m = raw.find("facet_metrics"); m != raw.end() && m->is_array()) {
      for (const auto& x : *m) {
        if (!x.is_string()) continue;
        if (auto fm = facet_metric_from_string(x.get<std::string>())) fr.metrics.push_back(*fm);
      }
    }
    if (auto x = raw.find("exclude_ids"); x != raw.end() && x->is_array()) {
      for (const auto& v : *x) fr.exclude_ids.push_back(text(v));
    }
    out.facet = fr;
  }
  return out;
}

}  // namespace sqa
