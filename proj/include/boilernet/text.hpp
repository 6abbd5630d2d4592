#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace boilernet::text {

// Decodes one UTF-8 sequence starting at `pos`. Invalid sequences yield
// U+FFFD and advance by one byte. Advances `pos` past the sequence.
char32_t decode_utf8(std::string_view s, std::size_t& pos);

void append_utf8(std::string& out, char32_t cp);

std::vector<char32_t> to_codepoints(std::string_view s);

// Word-constituent codepoints: letters and digits per a fixed range table
// (ASCII alphanumerics, Latin-1 and extended Latin letters, Greek,
// Cyrillic, Hebrew, Arabic, Devanagari, CJK, kana, Hangul, common digit
// blocks).
bool is_word_char(char32_t cp);

// ASCII, Latin-1, Greek and Cyrillic simple case folding; other
// codepoints pass through unchanged.
char32_t to_lower(char32_t cp);

// Whitespace for block-dropping purposes: ASCII whitespace plus NBSP.
bool is_space(char32_t cp);
bool is_ascii_space(char c);

// True when every codepoint of s is whitespace (empty counts as blank).
bool is_blank(std::string_view s);

// Lowercase maximal runs of letters/digits, punctuation and whitespace
// are separators.
std::vector<std::string> tokenize(std::string_view s);

// Collapses runs of whitespace into single spaces and trims the ends.
std::string normalize_whitespace(std::string_view s);

// Truncates to at most n codepoints without splitting a UTF-8 sequence.
std::string truncate_codepoints(std::string_view s, std::size_t n);

} // namespace boilernet::text
