#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pfb::text {

// Half-open byte range [begin, end).
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool empty() const { return begin == end; }
    std::string_view of(std::string_view s) const { return s.substr(begin, end - begin); }
    friend bool operator==(const Span&, const Span&) = default;
};

bool is_space(char c);
std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool starts_with_icase(std::string_view s, std::string_view prefix);
bool contains_icase(std::string_view haystack, std::string_view needle);

// Number of maximal runs of non-whitespace characters.
std::size_t count_words(std::string_view s);
std::vector<std::string_view> split_words(std::string_view s);

// A sentence is a maximal run ending in '.', '!' or '?' that is followed by
// whitespace or the end of the text. A trailing run without a terminator is
// also a sentence. Spans exclude surrounding whitespace.
std::vector<Span> split_sentences(std::string_view s);

// Lowercased words with leading/trailing ASCII punctuation stripped; empty
// results dropped.
std::vector<std::string> normalized_words(std::string_view s);

// CRLF and lone CR become LF.
std::string normalize_newlines(std::string_view s);

// UTF-8 code point helpers. Offsets are code point indices.
std::size_t codepoint_count(std::string_view s);
// Byte offset of code point `index`; nullopt when index > codepoint_count(s).
std::optional<std::size_t> codepoint_to_byte(std::string_view s, std::size_t index);
std::optional<std::string> codepoint_substr(std::string_view s, std::size_t start, std::size_t end);

} // namespace pfb::text
