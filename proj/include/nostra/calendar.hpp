#pragma once
// Whole-day calendar. Internally every date is an integer count of days since
// the epidemic start t0; only ingest and reports see ISO-8601 strings.

#include <chrono>
#include <string>
#include <string_view>

namespace nostra {

using CaseId = std::string;
using Day = int;

using Date = std::chrono::sys_days;

// Strict YYYY-MM-DD; throws std::invalid_argument on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);

inline Day days_between(Date from, Date to) { return static_cast<Day>((to - from).count()); }
inline Date add_days(Date from, Day offset) { return from + std::chrono::days{offset}; }

}  // namespace nostra
