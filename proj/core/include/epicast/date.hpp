#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace epicast {

using Date = std::chrono::sys_days;

/// Parses `YYYY-MM-DD`. Throws FormatError on anything else.
Date parse_iso_date(std::string_view text);

/// Parses the CSSE column style `M/D/YY` (years 2000-2099) or `M/D/YYYY`.
Date parse_mdy_date(std::string_view text);

std::string to_iso(Date date);

/// `M/D/YY` without zero padding, the way the upstream wide files write it.
std::string to_mdy(Date date);

/// Days since 1970-01-01.
inline long long days_since_epoch(Date date) { return date.time_since_epoch().count(); }

inline Date add_days(Date date, long long days) { return date + std::chrono::days{days}; }

} // namespace epicast
