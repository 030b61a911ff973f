#include "sqa/schema.hpp"

#include <regex>

namespace sqa {

using nlohmann::json;

bool is_placeholder(const std::string& s) {
  static const std::regex re(R"(^\$step[0-9]{1,9}\.[a-z_][a-z0-9_]*$)");
  return std::regex_match(s, re);
}

namespace {

bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "null") return v.is_null();
  return false;
}

std::string type_name(const json& v) {
  switch (v.type()) {
    case json::value_t::object: return "object";
    case json::value_t::array: return "array";
    case json::value_t::string: return "string";
    case json::value_t::boolean: return "boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return "integer";
    case json::value_t::number_float: return "number";
    case json::value_t::null: return "null";
    default: return "value";
  }
}

void check(const json& v, const json& s, const std::string& at, bool ph,
           std::vector<std::string>& out) {
  if (ph && v.is_string() && is_placeholder(v.get<std::string>())) return;
  const std::string where = at.empty() ? "/" : at;

  if (auto t = s.find("type"); t != s.end()) {
    bool ok = false;
    if (t->is_string()) {
      ok = has_type(v, t->get<std::string>());
    } else {
      for (const auto& x : *t) ok = ok || has_type(v, x.get<std::string>());
    }
    if (!ok) {
      out.push_back(where + ": expected " + (t->is_string() ? t->get<std::string>() : t->dump()) +
                    ", got " + type_name(v));
      return;
    }
  }
  if (auto e = s.find("enum"); e != s.end()) {
    if (std::find(e->begin(), e->end(), v) == e->end()) {
      out.push_back(where + ": " + v.dump() + " is not one of " + e->dump());
    }
  }
  if (v.is_number()) {
    if (auto m = s.find("minimum"); m != s.end() && v.get<double>() < m->get<double>()) {
      out.push_back(where + ": " + v.dump() + " is below minimum " + m->dump());
    }
    if (auto m = s.find("maximum"); m != s.end() && v.get<double>() > m->get<double>()) {
      out.push_back(where + ": " + v.dump() + " is above maximum " + m->dump());
    }
  }
  if (v.is_string()) {
    if (auto p = s.find("pattern"); p != s.end()) {
      std::regex re(p->get<std::string>());
      if (!std::regex_search(v.get<std::string>(), re)) {
        out.push_back(where + ": " + v.dump() + " does not match " + p->get<std::string>());
      }
    }
  }
  if (v.is_array()) {
    if (auto m = s.find("minItems"); m != s.end() && v.size() < m->get<std::size_t>()) {
      out.push_back(where + ": fewer than " + m->dump() + " items");
    }
    if (auto it = s.find("items"); it != s.end()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        check(v[i], *it, at + "/" + std::to_string(i), ph, out);
      }
    }
  }
  if (v.is_object()) {
    const json empty = json::object();
    const json& props = s.contains("properties") ? s["properties"] : empty;
    if (auto r = s.find("required"); r != s.end()) {
      for (const auto& k : *r) {
        if (!v.contains(k.get<std::string>())) {
          out.push_back(where + ": missing required property \"" + k.get<std::string>() + "\"");
        }
      }
    }
    bool closed = s.value("additionalProperties", true) == false;
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (auto p = props.find(it.key()); p != props.end()) {
        check(it.value(), *p, at + "/" + it.key(), ph, out);
      } else if (closed) {
        out.push_back(where + ": unexpected property \"" + it.key() + "\"");
      }
    }
  }
}

}  // namespace

std::vector<std::string> validate_json(const json& value, const json& schema,
                                       bool allow_placeholders) {
  std::vector<std::string> out;
  check(value, schema, "", allow_placeholders, out);
  return out;
}

}  // namespace sqa
