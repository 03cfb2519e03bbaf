#include "pfb/clock.hpp"
#include "pfb/text.hpp"

#include <doctest.h>

#include <stdexcept>

#include <random>
#include <set>

using namespace pfb;

TEST_CASE("count_words counts maximal non-whitespace runs") {
    CHECK(text::count_words("Overall, the text snippet is clear.") == 6);
    CHECK(text::count_words("") == 0);
    CHECK(text::count_words("  \n\t ") == 0);
    CHECK(text::count_words(" a  b\n\nc ") == 3);

    std::string joined;
    for (int i = 0; i < 201; ++i) {
        if (i) joined += '\n';
        joined += static_cast<char>('a' + i % 26);
    }
    CHECK(text::count_words(joined) == 201);
}

TEST_CASE("split_sentences") {
    const std::string t = "First one. Second!  Third? e.g.tail";
    const auto s = text::split_sentences(t);
    REQUIRE(s.size() == 4);
    CHECK(s[0].of(t) == "First one.");
    CHECK(s[1].of(t) == "Second!");
    CHECK(s[2].of(t) == "Third?");
    CHECK(s[3].of(t) == "e.g.tail");

    CHECK(text::split_sentences("").empty());
    CHECK(text::split_sentences("   ").empty());
    const std::string trailing = "No terminator here   ";
    REQUIRE(text::split_sentences(trailing).size() == 1);
    CHECK(text::split_sentences(trailing)[0].of(trailing) == "No terminator here");
}

TEST_CASE("normalized_words lowercases and strips punctuation") {
    const auto w = text::normalized_words("Formal, \"Scientific\" -- writing-style!");
    CHECK(w == std::vector<std::string>{"formal", "scientific", "writing-style"});
}

TEST_CASE("code point offsets") {
    const std::string s = "h\xC3\xA9llo \xE2\x9C\x93";  // "héllo ✓"
    CHECK(text::codepoint_count(s) == 7);
    CHECK(*text::codepoint_substr(s, 1, 2) == "\xC3\xA9");
    CHECK(*text::codepoint_substr(s, 6, 7) == "\xE2\x9C\x93");
    CHECK_FALSE(text::codepoint_substr(s, 3, 8).has_value());
    CHECK_FALSE(text::codepoint_substr(s, 4, 3).has_value());
}

TEST_CASE("normalize_newlines") {
    CHECK(text::normalize_newlines("a\r\nb\rc\n") == "a\nb\nc\n");
}

TEST_CASE("RFC 3339 formatting and parsing") {
    const Timestamp t = from_unix_ms(1709287200123);
    CHECK(format_rfc3339(t) == "2024-03-01T10:00:00.123Z");
    CHECK(parse_rfc3339("2024-03-01T10:00:00.123Z") == t);
    CHECK(parse_rfc3339("2024-03-01T11:00:00.123+01:00") == t);
    CHECK(parse_rfc3339("2024-03-01T10:00:00.1234567Z") == t);
    CHECK(parse_rfc3339("2024-03-01T10:00:00Z") == from_unix_ms(1709287200000));
    CHECK_THROWS_AS(parse_rfc3339("2024-03-01"), std::invalid_argument);
    CHECK_THROWS_AS(parse_rfc3339("2024-02-30T00:00:00Z"), std::invalid_argument);
    CHECK_THROWS_AS(parse_rfc3339("2024-03-01T10:00:00"), std::invalid_argument);

    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> ms(0, 4'102'444'800'000);  // through 2100
    for (int i = 0; i < 500; ++i) {
        const Timestamp x = from_unix_ms(ms(rng));
        CHECK(parse_rfc3339(format_rfc3339(x)) == x);
    }
}

TEST_CASE("IdGenerator produces distinct v4 UUIDs; seeded generators repeat") {
    IdGenerator ids;
    std::set<std::string> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto id = ids.next();
        CHECK(id.size() == 36);
        CHECK(id[14] == '4');
        seen.insert(id);
    }
    CHECK(seen.size() == 1000);
    IdGenerator a(42), b(42);
    CHECK(a.next() == b.next());
}
