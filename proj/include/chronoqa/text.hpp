#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chronoqa {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);

// Lowercased alphanumeric runs; bytes >= 0x80 count as alphanumeric so UTF-8
// words stay whole. `_` separates tokens.
std::vector<std::string> word_tokens(std::string_view s);

// Lowercase, trim, `_` -> space, collapse inner whitespace.
std::string normalize_answer(std::string_view s);

// Replaces whole-word occurrences of `word` (alnum/_ boundaries).
std::string replace_word(std::string_view text, std::string_view word, std::string_view replacement);

}  // namespace chronoqa
