#include "dpl/time.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace dpl {

namespace {

using namespace std::chrono;

bool parse_uint(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    const char c = s[i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  // strtod accepts a leading '+', from_chars does not
  std::string buf(s);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

} // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;

  // Epoch seconds: anything that parses as a plain number.
  if (const auto secs = parse_double(text)) {
    if (!std::isfinite(*secs)) return std::nullopt;
    return Timestamp{Duration{static_cast<Duration::rep>(std::llround(*secs * 1e6))}};
  }

  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!parse_uint(text, 0, 4, y) || text.size() < 10 || text[4] != '-' || text[7] != '-' ||
      !parse_uint(text, 5, 2, mo) || !parse_uint(text, 8, 2, d)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;

  std::size_t pos = 10;
  Duration frac{0};
  Duration offset{0};
  if (pos < text.size()) {
    if (text[pos] != 'T' && text[pos] != 't' && text[pos] != ' ') return std::nullopt;
    ++pos;
    if (!parse_uint(text, pos, 2, h) || pos + 2 >= text.size() || text[pos + 2] != ':' ||
        !parse_uint(text, pos + 3, 2, mi)) {
      return std::nullopt;
    }
    pos += 5;
    if (pos < text.size() && text[pos] == ':') {
      if (!parse_uint(text, pos + 1, 2, s)) return std::nullopt;
      pos += 3;
      if (pos < text.size() && (text[pos] == '.' || text[pos] == ',')) {
        ++pos;
        long long micros = 0;
        int digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
          if (digits < 6) {
            micros = micros * 10 + (text[pos] - '0');
            ++digits;
          }
          ++pos;
        }
        if (digits == 0) return std::nullopt;
        for (; digits < 6; ++digits) micros *= 10;
        frac = Duration{micros};
      }
    }
    if (h > 23 || mi > 59 || s > 60) return std::nullopt;
    if (pos < text.size()) {
      const char z = text[pos];
      if (z == 'Z' || z == 'z') {
        ++pos;
      } else if (z == '+' || z == '-') {
        int oh = 0, om = 0;
        if (!parse_uint(text, pos + 1, 2, oh)) return std::nullopt;
        std::size_t p = pos + 3;
        if (p < text.size() && text[p] == ':') ++p;
        if (!parse_uint(text, p, 2, om)) return std::nullopt;
        offset = hours{oh} + minutes{om};
        if (z == '-') offset = -offset;
        pos = p + 2;
      }
    }
    if (pos != text.size()) return std::nullopt;
  }
  return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s} + frac - offset;
}

std::string format_timestamp(Timestamp t) {
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss<Duration> tod{t - day_point};
  char buf[48];
  const auto micros = tod.subseconds().count();
  if (micros == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(tod.hours().count()), static_cast<long long>(tod.minutes().count()),
                  static_cast<long long>(tod.seconds().count()));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%06lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(tod.hours().count()), static_cast<long long>(tod.minutes().count()),
                  static_cast<long long>(tod.seconds().count()), static_cast<long long>(micros));
  }
  return buf;
}

std::optional<Duration> parse_duration(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (const auto secs = parse_double(text)) {
    if (!std::isfinite(*secs) || *secs < 0) return std::nullopt;
    return Duration{static_cast<Duration::rep>(std::llround(*secs * 1e6))};
  }

  // one or more <number><unit> parts, e.g. "7d", "1.5h", "3d12h30m"
  double total_us = 0.0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t num_begin = pos;
    while (pos < text.size() && (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) ++pos;
    const std::size_t unit_begin = pos;
    while (pos < text.size() && std::isalpha(static_cast<unsigned char>(text[pos]))) ++pos;
    const auto number = parse_double(text.substr(num_begin, unit_begin - num_begin));
    const std::string_view unit = text.substr(unit_begin, pos - unit_begin);
    if (!number || unit.empty()) return std::nullopt;
    double scale = 0.0;
    if (unit == "s") scale = 1.0;
    else if (unit == "ms") scale = 1e-3;
    else if (unit == "us") scale = 1e-6;
    else if (unit == "m" || unit == "min") scale = 60.0;
    else if (unit == "h") scale = 3600.0;
    else if (unit == "d") scale = 86400.0;
    else if (unit == "w") scale = 7 * 86400.0;
    else return std::nullopt;
    total_us += *number * scale * 1e6;
  }
  return Duration{static_cast<Duration::rep>(std::llround(total_us))};
}

std::string format_duration(Duration d) {
  const auto us = d.count();
  struct Unit {
    long long size;
    const char* suffix;
  };
  static constexpr Unit units[] = {{86400000000LL, "d"}, {3600000000LL, "h"}, {60000000LL, "m"},
                                   {1000000LL, "s"},     {1000LL, "ms"},      {1LL, "us"}};
  for (const auto& u : units) {
    if (us != 0 && us % u.size == 0) return std::to_string(us / u.size) + u.suffix;
  }
  return "0s";
}

} // namespace dpl
