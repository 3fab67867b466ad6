#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace dpl {

// Stream time has microsecond resolution and is anchored at the Unix epoch.
using Duration = std::chrono::microseconds;
using Timestamp = std::chrono::sys_time<Duration>;

// Parses "2022-03-07T12:00:00Z", "2022-03-07 12:00:00.250+01:00",
// "2022-03-07" or a plain number of epoch seconds ("1646654400.5").
std::optional<Timestamp> parse_timestamp(std::string_view text);

// ISO-8601 UTC, e.g. "2022-03-07T12:00:00Z". Fractional seconds are only
// printed when non-zero.
std::string format_timestamp(Timestamp t);

// Humane durations: "7d", "5h", "90s", "15m", "250ms", "1.5d", or a plain
// number of seconds.
std::optional<Duration> parse_duration(std::string_view text);

std::string format_duration(Duration d);

inline double to_seconds(Duration d) {
  return std::chrono::duration<double>(d).count();
}

inline Duration from_seconds(double s) {
  return std::chrono::duration_cast<Duration>(std::chrono::duration<double>(s));
}

} // namespace dpl
