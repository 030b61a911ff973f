#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sqa {

/// Validates `value` against a JSON Schema subset: type (string or list),
/// enum, properties, required, additionalProperties (bool), items,
/// minimum, maximum, minItems, pattern. Returns one message per violation,
/// each prefixed with the JSON pointer of the offending value.
///
/// With `allow_placeholders`, any string of the form `$step<k>.<path>` is
/// accepted in place of a value of any type.
std::vector<std::string> validate_json(const nlohmann::json& value, const nlohmann::json& schema,
                                       bool allow_placeholders = false);

bool is_placeholder(const std::string& s);

}  // namespace sqa
