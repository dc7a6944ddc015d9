#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fashionrag::toml {

// Subset used by the engine config: [section] headers, key = value pairs with
// basic strings, integers, floats and booleans, '#' comments.
using Value = std::variant<std::string, std::int64_t, double, bool>;
using Table = std::map<std::string, Value>;
using Document = std::map<std::string, Table>;  // "" holds keys before any header

// Throws config_error with the offending line number.
Document parse(std::string_view text);

std::string_view type_name(const Value& v) noexcept;

}  // namespace fashionrag::toml
