#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fashionrag::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b) noexcept;

// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

std::optional<double> parse_double(std::string_view s);

// Lowercased word tokens. Boundaries: any non-alphanumeric ASCII byte,
// lower->upper humps ("BlueShirt"), the last capital of an acronym run before
// a lowercase letter ("OOTDLook" -> ootd, look) and letter<->digit changes.
// Bytes >= 0x80 are kept inside tokens unchanged.
std::vector<std::string> tokenize(std::string_view s);

// Lowercase alphanumeric-only rendering ("#Co_Ord" -> "coord").
std::string squash(std::string_view s);

// "hot pink" -> "HotPink", "co-ord set" -> "CoOrdSet".
std::string pascal_case(std::string_view s);

// Sentences end at '.', '!' or '?' followed by whitespace or end of text.
std::vector<std::string> split_sentences(std::string_view s);

}  // namespace fashionrag::text
