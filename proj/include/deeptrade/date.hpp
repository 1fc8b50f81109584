#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace deeptrade {

// Calendar date with day resolution. Arithmetic is in days.
using Date = std::chrono::sys_days;

// Parses strict ISO-8601 `YYYY-MM-DD`. Returns nullopt on any malformed input
// or invalid calendar date.
std::optional<Date> parse_date(std::string_view text);

std::string format_date(Date d);

Date make_date(int year, unsigned month, unsigned day);

int year_of(Date d);

inline Date jan_first(int year) { return make_date(year, 1, 1); }
inline Date dec_last(int year) { return make_date(year, 12, 31); }

bool is_weekday(Date d);

}  // namespace deeptrade
