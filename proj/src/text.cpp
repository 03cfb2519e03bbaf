#include "pfb/text.hpp"

#include <algorithm>
#include <cctype>

namespace pfb::text {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool starts_with_icase(std::string_view s, std::string_view prefix) {
    if (prefix.size() > s.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(s[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

bool contains_icase(std::string_view haystack, std::string_view needle) {
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::size_t count_words(std::string_view s) {
    std::size_t count = 0;
    bool in_word = false;
    for (char c : s) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

std::vector<std::string_view> split_words(std::string_view s) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        const std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) words.push_back(s.substr(start, i - start));
    }
    return words;
}

namespace {
bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }
} // namespace

std::vector<Span> split_sentences(std::string_view s) {
    std::vector<Span> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        if (i >= s.size()) break;
        const std::size_t start = i;
        std::size_t end = s.size();
        for (; i < s.size(); ++i) {
            if (is_terminator(s[i]) && (i + 1 == s.size() || is_space(s[i + 1]))) {
                end = i + 1;
                ++i;
                break;
            }
        }
        if (end == s.size()) {
            while (end > start && is_space(s[end - 1])) --end;
            i = s.size();
        }
        out.push_back({start, end});
    }
    return out;
}

std::vector<std::string> normalized_words(std::string_view s) {
    std::vector<std::string> out;
    for (std::string_view w : split_words(s)) {
        while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.front()))) w.remove_prefix(1);
        while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.remove_suffix(1);
        if (!w.empty()) out.push_back(to_lower(w));
    }
    return out;
}

std::string normalize_newlines(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

namespace {
bool is_continuation(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }
} // namespace

std::size_t codepoint_count(std::string_view s) {
    return static_cast<std::size_t>(
        std::count_if(s.begin(), s.end(), [](char c) { return !is_continuation(c); }));
}

std::optional<std::size_t> codepoint_to_byte(std::string_view s, std::size_t index) {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (is_continuation(s[i])) continue;
        if (seen == index) return i;
        ++seen;
    }
    if (seen == index) return s.size();
    return std::nullopt;
}

std::optional<std::string> codepoint_substr(std::string_view s, std::size_t start, std::size_t end) {
    if (start > end) return std::nullopt;
    const auto b = codepoint_to_byte(s, start);
    const auto e = codepoint_to_byte(s, end);
    if (!b || !e) return std::nullopt;
    return std::string(s.substr(*b, *e - *b));
}

} // namespace pfb::text
