#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qdrag::text {

// Maximal runs of non-whitespace bytes.
std::vector<std::string_view> split_whitespace(std::string_view s);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

// Lowercase and collapse every whitespace run into a single space (trimmed).
std::string collapse_whitespace_lower(std::string_view s);

// Tokens used by the mock encoders: lowercase whitespace tokens with leading
// and trailing ASCII punctuation removed; tokens that become empty are dropped.
std::vector<std::string> content_tokens(std::string_view s);

// 64-bit FNV-1a, optionally seeded by folding the seed into the offset basis.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0);

std::string hex64(std::uint64_t v);

// Replaces every occurrence of `key` in `tmpl` with `value`.
std::string replace_all(std::string tmpl, std::string_view key, std::string_view value);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

}  // namespace qdrag::text
