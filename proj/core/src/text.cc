#include "qdrag/text.h"

#include <cctype>
#include <cstdio>

namespace qdrag::text {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string collapse_whitespace_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::string_view tok : split_whitespace(s)) {
    if (!out.empty()) out.push_back(' ');
    out += to_lower(tok);
  }
  return out;
}

std::vector<std::string> content_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (std::string_view tok : split_whitespace(s)) {
    std::size_t b = 0;
    std::size_t e = tok.size();
    while (b < e && is_punct(tok[b])) ++b;
    while (e > b && is_punct(tok[e - 1])) --e;
    if (e > b) out.push_back(to_lower(tok.substr(b, e - b)));
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string replace_all(std::string tmpl, std::string_view key, std::string_view value) {
  if (key.empty()) return tmpl;
  std::size_t pos = 0;
  while ((pos = tmpl.find(key, pos)) != std::string::npos) {
    tmpl.replace(pos, key.size(), value);
    pos += value.size();
  }
  return tmpl;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace qdrag::text
