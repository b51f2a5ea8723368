#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace storyecho {

// Malformed UTF-8 sequences decode to U+FFFD, one per offending byte.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

// Unicode 17 script=Han, minus the one Han code point with a punctuation
// general category (U+16FE2).
bool is_han(char32_t cp);

std::size_t count_han_chars(std::string_view text);

bool is_sentence_terminal(char32_t cp);

// Text up to and including the first of 。！？, or the whole text.
std::string first_sentence(std::string_view text);

// True when the trimmed text has no sentence terminal except at its end.
bool is_single_sentence(std::string_view text);

// First n code points.
std::u32string prefix_code_points(std::string_view text, std::size_t n);

// Non-overlapping occurrences of needle in haystack; 0 for an empty needle.
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

bool is_latin_letter(char32_t cp);
bool is_emoji(char32_t cp);

} // namespace storyecho
