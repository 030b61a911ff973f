#include "sqa/resolver.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "sqa/error.hpp"
#include "sqa/kernels.hpp"

namespace sqa {

namespace {

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    auto c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    int extra = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1f;
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      cp = c & 0x0f;
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      cp = c & 0x07;
      extra = 3;
    } else {
      ++i;  // stray continuation byte
      continue;
    }
    if (i + static_cast<std::size_t>(extra) >= s.size() && extra > 0) break;
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      auto cc = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3f);
    }
    i += static_cast<std::size_t>(extra) + 1;
    if (ok) out.push_back(cp);
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
  }
  return out;
}

// Latin-1 Supplement and Latin Extended-A folded to lowercase ASCII. Entries
// may expand to two letters (ß -> ss, æ -> ae).
std::u32string_view fold_latin(char32_t cp) {
  static const char* const kLatin1[] = {
      // U+00C0 .. U+00FF
      "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
      "d", "n", "o", "o", "o", "o", "o", "",  "o", "u", "u", "u", "u", "y", "th", "ss",
      "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e", "e", "i", "i", "i", "i",
      "d", "n", "o", "o", "o", "o", "o", "",  "o", "u", "u", "u", "u", "y", "th", "y"};
  struct Range {
    char32_t lo, hi;
    const char* fold;
  };
  // U+0100 .. U+017F
  static constexpr Range kExtA[] = {
      {0x100, 0x105, "a"}, {0x106, 0x10D, "c"}, {0x10E, 0x111, "d"}, {0x112, 0x11B, "e"},
      {0x11C, 0x123, "g"}, {0x124, 0x127, "h"}, {0x128, 0x131, "i"}, {0x132, 0x133, "ij"},
      {0x134, 0x135, "j"}, {0x136, 0x138, "k"}, {0x139, 0x142, "l"}, {0x143, 0x14B, "n"},
      {0x14C, 0x151, "o"}, {0x152, 0x153, "oe"}, {0x154, 0x159, "r"}, {0x15A, 0x161, "s"},
      {0x162, 0x167, "t"}, {0x168, 0x173, "u"}, {0x174, 0x175, "w"}, {0x176, 0x178, "y"},
      {0x179, 0x17E, "z"}, {0x17F, 0x17F, "s"}};
  static thread_local std::u32string buf;
  buf.clear();
  if (cp >= 0xC0 && cp <= 0xFF) {
    for (const char* p = kLatin1[cp - 0xC0]; *p; ++p) buf.push_back(static_cast<char32_t>(*p));
    return buf;
  }
  for (const auto& r : kExtA) {
    if (cp >= r.lo && cp <= r.hi) {
      for (const char* p = r.fold; *p; ++p) buf.push_back(static_cast<char32_t>(*p));
      return buf;
    }
  }
  return {};
}

bool is_ascii_punct(char32_t c) {
  return (c >= 0x21 && c <= 0x2f) || (c >= 0x3a && c <= 0x40) || (c >= 0x5b && c <= 0x60) ||
         (c >= 0x7b && c <= 0x7e);
}

bool is_space(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' ||
         c == 0xA0 || c == 0x3000;
}

// General punctuation block and a few common typographic marks.
bool is_unicode_punct(char32_t c) {
  return (c >= 0x2010 && c <= 0x205E) || c == 0xA1 || c == 0xBF || c == 0xAB || c == 0xBB ||
         c == 0xB7 || (c >= 0x3001 && c <= 0x3003);
}

std::u32string normalize_cp(std::string_view raw) {
  std::u32string in = decode_utf8(raw);
  std::u32string out;
  out.reserve(in.size());
  bool pending_space = false;
  auto emit = [&](char32_t c) {
    if (pending_space && !out.empty()) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  };
  for (char32_t c : in) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (is_ascii_punct(c) || is_unicode_punct(c)) continue;
    if (c >= 0x300 && c <= 0x36F) continue;  // combining diacritics
    if (c < 0x80) {
      if (c >= 'A' && c <= 'Z') c = c - 'A' + 'a';
      if (c < 0x20 || c == 0x7f) continue;
      emit(c);
      continue;
    }
    auto folded = fold_latin(c);
    if (!folded.empty()) {
      for (char32_t f : folded) emit(f);
    } else if (c == 0xD7 || c == 0xF7) {
      continue;  // multiplication / division signs
    } else {
      emit(c);
    }
  }
  return out;
}

}  // namespace

std::string normalize_name(std::string_view s) { return encode_utf8(normalize_cp(s)); }

NameKey make_name_key(std::string_view raw) {
  NameKey k;
  k.text = normalize_cp(raw);
  if (k.text.size() >= 3) {
    k.grams.reserve(k.text.size() - 2);
    for (std::size_t i = 0; i + 2 < k.text.size(); ++i) {
      std::uint64_t g = (static_cast<std::uint64_t>(k.text[i]) << 42) |
                        (static_cast<std::uint64_t>(k.text[i + 1]) << 21) |
                        static_cast<std::uint64_t>(k.text[i + 2]);
      k.grams.push_back(g);
    }
    std::sort(k.grams.begin(), k.grams.end());
    k.grams.erase(std::unique(k.grams.begin(), k.grams.end()), k.grams.end());
  }
  return k;
}

double similarity(const NameKey& a, const NameKey& b) {
  if (a.text.size() < 3 || b.text.size() < 3) return a.text == b.text ? 1.0 : 0.0;
  std::size_t inter = 0;
  auto i = a.grams.begin();
  auto j = b.grams.begin();
  while (i != a.grams.end() && j != b.grams.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  std::size_t uni = a.grams.size() + b.grams.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double similarity(std::string_view a, std::string_view b) {
  return similarity(make_name_key(a), make_name_key(b));
}

void to_json(nlohmann::json& j, const RankedCandidates& r) {
  j = nlohmann::json{{"query_name", r.query_name},
                     {"type", to_string(r.type)},
                     {"threshold", r.threshold},
                     {"no_match", r.no_match()}};
  auto arr = nlohmann::json::array();
  for (const auto& c : r.candidates) {
    arr.push_back({{"id", c.entity.id},
                   {"type", to_string(c.entity.type)},
                   {"name", c.entity.name},
                   {"aliases", c.entity.aliases},
                   {"score", c.score},
                   {"exact", c.exact}});
  }
  j["candidates"] = std::move(arr);
}

EntityResolver::EntityResolver(const Corpus& corpus) : corpus_(corpus) {
  keys_.resize(corpus.entities().size());
  for (EntityIndex e = 0; e < keys_.size(); ++e) {
    const EntityRef& ref = corpus.entity(e);
    keys_[e].push_back(make_name_key(ref.name));
    for (const auto& a : ref.aliases) keys_[e].push_back(make_name_key(a));
  }
}

RankedCandidates EntityResolver::resolve(std::string_view name, EntityType type, int top_k,
                                         double threshold) const {
  if (top_k < 1) throw Error(ErrorCode::kInvalidInput, "top_k must be positive");
  NameKey query = make_name_key(name);
  if (query.text.empty()) {
    throw Error(ErrorCode::kInvalidInput, "entity name is empty after normalization");
  }
  auto scores = kernels::score_entities_parallel(*this, type, query);
  auto ids = corpus_.entities_of_type(type);

  struct Hit {
    EntityIndex e;
    kernels::EntityScore s;
  };
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (scores[i].score >= threshold) hits.push_back({ids[i], scores[i]});
  }
  std::sort(hits.begin(), hits.end(), [&](const Hit& x, const Hit& y) {
    if (x.s.score != y.s.score) return x.s.score > y.s.score;
    if (x.s.exact != y.s.exact) return x.s.exact;
    return corpus_.entity(x.e).id < corpus_.entity(y.e).id;
  });
  if (hits.size() > static_cast<std::size_t>(top_k)) hits.resize(static_cast<std::size_t>(top_k));

  RankedCandidates out;
  out.query_name = std::string(name);
  out.type = type;
  out.threshold = threshold;
  for (const auto& h : hits) out.candidates.push_back({corpus_.entity(h.e), h.s.score, h.s.exact});
  return out;
}

}  // namespace sqa
