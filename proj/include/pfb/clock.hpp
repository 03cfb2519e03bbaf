#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>

namespace pfb {

// UTC wall time at millisecond resolution.
using Timestamp = std::chrono::time_point<std::chrono::system_clock, std::chrono::milliseconds>;
using Millis = std::chrono::milliseconds;

Timestamp now_utc();
Timestamp from_unix_ms(std::int64_t ms);
std::int64_t to_unix_ms(Timestamp t);

// RFC 3339, always emitted as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string format_rfc3339(Timestamp t);
// Accepts 'Z' or a numeric offset and an optional fraction (truncated to ms).
// Throws std::invalid_argument on malformed input.
Timestamp parse_rfc3339(std::string_view text);

using Clock = std::function<Timestamp()>;

// Clock that starts at `start` and advances by `step` on every call.
Clock stepping_clock(Timestamp start, Millis step = Millis{1});

class IdGenerator {
public:
    IdGenerator();                               // seeded from std::random_device
    explicit IdGenerator(std::uint64_t seed);

    // Random (version 4) UUID in canonical 8-4-4-4-12 hex form.
    std::string next();

private:
    std::mt19937_64 rng_;
};

} // namespace pfb
