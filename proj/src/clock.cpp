#include "pfb/clock.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace pfb {

namespace chr = std::chrono;

Timestamp now_utc() {
    return chr::time_point_cast<Millis>(chr::system_clock::now());
}

Timestamp from_unix_ms(std::int64_t ms) { return Timestamp{Millis{ms}}; }

std::int64_t to_unix_ms(Timestamp t) { return t.time_since_epoch().count(); }

std::string format_rfc3339(Timestamp t) {
    const auto day = chr::floor<chr::days>(t);
    const chr::year_month_day ymd{day};
    const auto ms_of_day = (t - day).count();
    const auto h = ms_of_day / 3'600'000;
    const auto m = (ms_of_day / 60'000) % 60;
    const auto s = (ms_of_day / 1000) % 60;
    const auto ms = ms_of_day % 1000;
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(h), static_cast<int>(m),
                  static_cast<int>(s), static_cast<int>(ms));
    return buf.data();
}

namespace {

int take_digits(std::string_view text, std::size_t& pos, std::size_t count) {
    if (pos + count > text.size()) throw std::invalid_argument("truncated timestamp");
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const char c = text[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw std::invalid_argument("expected digit in timestamp");
        value = value * 10 + (c - '0');
    }
    pos += count;
    return value;
}

void expect(std::string_view text, std::size_t& pos, char c) {
    if (pos >= text.size() || text[pos] != c)
        throw std::invalid_argument(std::string("expected '") + c + "' in timestamp");
    ++pos;
}

} // namespace

Timestamp parse_rfc3339(std::string_view text) {
    std::size_t pos = 0;
    const int year = take_digits(text, pos, 4);
    expect(text, pos, '-');
    const int month = take_digits(text, pos, 2);
    expect(text, pos, '-');
    const int day = take_digits(text, pos, 2);
    if (pos >= text.size() || (text[pos] != 'T' && text[pos] != 't' && text[pos] != ' '))
        throw std::invalid_argument("expected 'T' in timestamp");
    ++pos;
    const int hour = take_digits(text, pos, 2);
    expect(text, pos, ':');
    const int minute = take_digits(text, pos, 2);
    expect(text, pos, ':');
    const int second = take_digits(text, pos, 2);

    int millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            if (digits < 3) millis = millis * 10 + (text[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) throw std::invalid_argument("empty fraction in timestamp");
        for (int d = digits; d < 3; ++d) millis *= 10;
    }

    int offset_minutes = 0;
    if (pos < text.size() && (text[pos] == 'Z' || text[pos] == 'z')) {
        ++pos;
    } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        const int sign = text[pos] == '-' ? -1 : 1;
        ++pos;
        const int oh = take_digits(text, pos, 2);
        expect(text, pos, ':');
        const int om = take_digits(text, pos, 2);
        offset_minutes = sign * (oh * 60 + om);
    } else {
        throw std::invalid_argument("missing timezone in timestamp");
    }
    if (pos != text.size()) throw std::invalid_argument("trailing characters in timestamp");

    const chr::year_month_day ymd{chr::year{year}, chr::month{static_cast<unsigned>(month)},
                                  chr::day{static_cast<unsigned>(day)}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second > 60)
        throw std::invalid_argument("timestamp field out of range");

    Timestamp t = chr::time_point_cast<Millis>(chr::sys_days{ymd}) + chr::hours{hour} +
                  chr::minutes{minute} + chr::seconds{second} + Millis{millis};
    return t - chr::minutes{offset_minutes};
}

Clock stepping_clock(Timestamp start, Millis step) {
    auto current = std::make_shared<Timestamp>(start);
    return [current, step] {
        const Timestamp t = *current;
        *current += step;
        return t;
    };
}

IdGenerator::IdGenerator() : rng_(std::random_device{}()) {}

IdGenerator::IdGenerator(std::uint64_t seed) : rng_(seed) {}

std::string IdGenerator::next() {
    std::array<unsigned char, 16> bytes{};
    for (std::size_t i = 0; i < bytes.size(); i += 8) {
        auto word = rng_();
        for (std::size_t j = 0; j < 8; ++j) {
            bytes[i + j] = static_cast<unsigned char>(word & 0xff);
            word >>= 8;
        }
    }
    bytes[6] = static_cast<unsigned char>((bytes[6] & 0x0f) | 0x40);
    bytes[8] = static_cast<unsigned char>((bytes[8] & 0x3f) | 0x80);

    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(36);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (i == 4 || i == 6 || i == 8 || i == 10) out.push_back('-');
        out.push_back(hex[bytes[i] >> 4]);
        out.push_back(hex[bytes[i] & 0x0f]);
    }
    return out;
}

} // namespace pfb
