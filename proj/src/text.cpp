#include "fashionrag/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace fashionrag::text {

namespace {

bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) noexcept { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) noexcept { return c >= 'a' && c <= 'z'; }
bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
bool is_high(char c) noexcept { return static_cast<unsigned char>(c) >= 0x80; }
bool is_word(char c) noexcept { return is_upper(c) || is_lower(c) || is_digit(c) || is_high(c); }
char lower(char c) noexcept { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }
char upper(char c) noexcept { return is_lower(c) ? static_cast<char>(c - 'a' + 'A') : c; }

}  // namespace

std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

bool iequals(std::string_view a, std::string_view b) noexcept {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return lower(x) == lower(y); });
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  while (!s.empty()) {
    const auto nl = s.find('\n');
    std::string_view line = s.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    s.remove_prefix(nl + 1);
  }
  return lines;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (!is_word(c)) {
      flush();
      continue;
    }
    if (!current.empty()) {
      const char prev = s[i - 1];
      const bool hump = is_lower(prev) && is_upper(c);
      const bool acronym_end =
          is_upper(prev) && is_upper(c) && i + 1 < s.size() && is_lower(s[i + 1]);
      const bool digit_edge = (is_digit(prev) != is_digit(c)) && !is_high(prev) && !is_high(c);
      if (hump || acronym_end || digit_edge) flush();
    }
    current.push_back(lower(c));
  }
  flush();
  return tokens;
}

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (is_word(c)) out.push_back(lower(c));
  }
  return out;
}

std::string pascal_case(std::string_view s) {
  std::string out;
  bool start = true;
  for (char c : s) {
    if (!is_word(c)) {
      start = true;
      continue;
    }
    out.push_back(start ? upper(c) : c);
    start = false;
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?') continue;
    // Runs like "?!" or "..." stay with the sentence they close.
    while (i + 1 < s.size() && (s[i + 1] == '.' || s[i + 1] == '!' || s[i + 1] == '?')) ++i;
    if (i + 1 == s.size() || is_space(s[i + 1])) {
      const auto sentence = trim(s.substr(start, i + 1 - start));
      if (!sentence.empty()) sentences.emplace_back(sentence);
      start = i + 1;
    }
  }
  const auto tail = trim(s.substr(std::min(start, s.size())));
  if (!tail.empty()) sentences.emplace_back(tail);
  return sentences;
}

}  // namespace fashionrag::text
