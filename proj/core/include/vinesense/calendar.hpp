#pragma once

// Calendar helpers. Storage and the wire format are UTC epoch seconds; day
// boundaries are station-local via a fixed UTC offset.

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace vinesense {

using Date = std::chrono::year_month_day;
using EpochSeconds = std::int64_t;

inline constexpr EpochSeconds kSecondsPerDay = 86400;
inline constexpr EpochSeconds kSecondsPerHour = 3600;
inline constexpr EpochSeconds kTickSeconds = 900;  // 15-minute sampling
inline constexpr int kTicksPerDay = 96;

Date make_date(int year, unsigned month, unsigned day);

/// Days since 1970-01-01.
std::int64_t day_number(const Date& date);
Date date_from_day_number(std::int64_t days);
Date add_days(const Date& date, std::int64_t days);
std::int64_t days_between(const Date& from, const Date& to);

/// 1..366
int day_of_year(const Date& date);

/// Local calendar day containing `ts` for a station `utc_offset_s` east of UTC.
Date local_date(EpochSeconds ts, std::int32_t utc_offset_s = 0);
/// UTC epoch of local midnight starting `date`.
EpochSeconds local_midnight(const Date& date, std::int32_t utc_offset_s = 0);

std::string to_iso(const Date& date);
/// ISO-8601 UTC, e.g. 2025-03-01T06:15:00Z
std::string to_iso_utc(EpochSeconds ts);

/// Accepts YYYY-MM-DD.
Date parse_date(std::string_view text);
/// Accepts YYYY-MM-DD (midnight UTC), YYYY-MM-DDTHH:MM[:SS]Z, or plain epoch seconds.
EpochSeconds parse_timestamp(std::string_view text);

}  // namespace vinesense
