// Copyright 2026 The xaimos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xaimos/time_util.hpp"

#include <charconv>
#include <cstdio>

#include "xaimos/errors.hpp"

namespace xaimos {

namespace {

int parse_digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) throw ValidationError("bad timestamp");
  int v = 0;
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + n, v);
  if (ec != std::errc{} || p != s.data() + pos + n) {
    throw ValidationError("bad timestamp: " + std::string(s));
  }
  return v;
}

}  // namespace

std::string format_rfc3339(TimePoint t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()),
                static_cast<int>(hms.subseconds().count()));
  return buf;
}

TimePoint parse_rfc3339(std::string_view s) {
  using namespace std::chrono;
  if (s.size() < 20 || s[4] != '-' || s[7] != '-' ||
      (s[10] != 'T' && s[10] != 't' && s[10] != ' ') || s[13] != ':' ||
      s[16] != ':') {
    throw ValidationError("bad timestamp: " + std::string(s));
  }
  const year_month_day ymd{year{parse_digits(s, 0, 4)},
                           month{static_cast<unsigned>(parse_digits(s, 5, 2))},
                           day{static_cast<unsigned>(parse_digits(s, 8, 2))}};
  if (!ymd.ok()) throw ValidationError("bad date: " + std::string(s));
  const int hh = parse_digits(s, 11, 2);
  const int mm = parse_digits(s, 14, 2);
  const int ss = parse_digits(s, 17, 2);
  if (hh > 23 || mm > 59 || ss > 60) {
    throw ValidationError("bad time: " + std::string(s));
  }
  std::size_t pos = 19;
  int ms = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 3) ms = ms * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) throw ValidationError("bad fraction: " + std::string(s));
    for (int d = digits; d < 3; ++d) ms *= 10;
  }
  if (pos >= s.size()) throw ValidationError("missing offset: " + std::string(s));
  int offset_min = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '-' ? -1 : 1;
    if (pos + 6 != s.size() || s[pos + 3] != ':') {
      throw ValidationError("bad offset: " + std::string(s));
    }
    offset_min = sign * (parse_digits(s, pos + 1, 2) * 60 +
                         parse_digits(s, pos + 4, 2));
    pos += 6;
  } else {
    throw ValidationError("bad offset: " + std::string(s));
  }
  if (pos != s.size()) throw ValidationError("trailing data: " + std::string(s));
  return TimePoint{sys_days{ymd}} + hours{hh} + minutes{mm} + seconds{ss} +
         milliseconds{ms} - minutes{offset_min};
}

TimePoint SystemClock::now() const {
  return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
}

}  // namespace xaimos
