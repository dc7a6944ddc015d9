#include "fashionrag/toml_lite.hpp"

#include <cctype>
#include <charconv>

#include "fashionrag/error.hpp"
#include "fashionrag/text.hpp"

namespace fashionrag::toml {

namespace {

[[noreturn]] void fail(std::size_t line_no, const std::string& why) {
  throw Error(ErrorCode::config_error, "config line " + std::to_string(line_no) + ": " + why);
}

bool bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-';
}

std::string parse_key(std::string_view s, std::size_t line_no) {
  s = text::trim(s);
  if (s.empty()) fail(line_no, "empty key");
  for (char c : s) {
    if (!bare_key_char(c)) fail(line_no, "unsupported key '" + std::string(s) + "'");
  }
  return std::string(s);
}

// Parses a basic string starting at s[0] == '"'; returns it and sets `rest`.
std::string parse_string(std::string_view s, std::string_view& rest, std::size_t line_no) {
  std::string out;
  std::size_t i = 1;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') break;
    if (c != '\\') {
      out += c;
      continue;
    }
    if (++i >= s.size()) fail(line_no, "unterminated escape");
    switch (s[i]) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      default: fail(line_no, std::string("unsupported escape \\") + s[i]);
    }
  }
  if (i >= s.size()) fail(line_no, "unterminated string");
  rest = s.substr(i + 1);
  return out;
}

std::string_view strip_comment(std::string_view s) {
  const auto hash = s.find('#');
  return hash == std::string_view::npos ? s : s.substr(0, hash);
}

Value parse_value(std::string_view raw, std::size_t line_no) {
  auto s = text::trim(raw);
  if (s.empty()) fail(line_no, "missing value");
  if (s.front() == '"') {
    std::string_view rest;
    auto str = parse_string(s, rest, line_no);
    if (!text::trim(strip_comment(rest)).empty()) fail(line_no, "trailing characters after string");
    return str;
  }
  s = text::trim(strip_comment(s));
  if (s == "true") return true;
  if (s == "false") return false;
  std::string digits;
  for (char c : s) {
    if (c != '_') digits += c;
  }
  const bool is_float = digits.find_first_of(".eE") != std::string::npos ||
                        digits == "inf" || digits == "nan";
  if (!is_float) {
    std::int64_t v = 0;
    const char* first = digits.data();
    if (!digits.empty() && digits.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, digits.data() + digits.size(), v);
    if (ec == std::errc() && ptr == digits.data() + digits.size()) return v;
  }
  if (const auto d = text::parse_double(digits)) return *d;
  fail(line_no, "unsupported value '" + std::string(s) + "'");
}

}  // namespace

Document parse(std::string_view input) {
  Document doc;
  doc[""];
  std::string section;
  std::size_t line_no = 0;
  for (const auto raw : text::split_lines(input)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      const auto close = line.find(']');
      if (close == std::string_view::npos) fail(line_no, "unterminated section header");
      if (!text::trim(strip_comment(line.substr(close + 1))).empty()) {
        fail(line_no, "trailing characters after section header");
      }
      section = parse_key(line.substr(1, close - 1), line_no);
      if (doc.count(section) != 0 && !doc[section].empty()) fail(line_no, "duplicate section [" + section + "]");
      doc[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    const auto key = parse_key(line.substr(0, eq), line_no);
    auto& table = doc[section];
    if (table.count(key) != 0) fail(line_no, "duplicate key '" + key + "'");
    table.emplace(key, parse_value(line.substr(eq + 1), line_no));
  }
  return doc;
}

std::string_view type_name(const Value& v) noexcept {
  switch (v.index()) {
    case 0: return "string";
    case 1: return "integer";
    case 2: return "float";
    default: return "boolean";
  }
}

}  // namespace fashionrag::toml
