#include <gtest/gtest.h>

#include "vinesense/calendar.hpp"
#include "vinesense/error.hpp"

using namespace vinesense;

TEST(Calendar, DayNumberRoundTrip) {
  for (std::int64_t n = -800; n < 40000; n += 37) {
    EXPECT_EQ(day_number(date_from_day_number(n)), n);
  }
  EXPECT_EQ(day_number(make_date(1970, 1, 1)), 0);
  EXPECT_EQ(days_between(make_date(2024, 2, 28), make_date(2024, 3, 1)), 2);
  EXPECT_EQ(add_days(make_date(2025, 12, 31), 1), make_date(2026, 1, 1));
}

TEST(Calendar, DayOfYear) {
  EXPECT_EQ(day_of_year(make_date(2025, 1, 1)), 1);
  EXPECT_EQ(day_of_year(make_date(2025, 7, 6)), 187);
  EXPECT_EQ(day_of_year(make_date(2024, 12, 31)), 366);
}

TEST(Calendar, InvalidDateRejected) {
  EXPECT_THROW(make_date(2025, 2, 29), Error);
  EXPECT_THROW(parse_date("2025-13-01"), Error);
  EXPECT_THROW(parse_date("2025-1-01"), Error);
}

TEST(Calendar, LocalDayBoundariesFollowOffset) {
  const EpochSeconds midnight_utc = day_number(make_date(2025, 3, 1)) * kSecondsPerDay;
  EXPECT_EQ(local_date(midnight_utc), make_date(2025, 3, 1));
  // 07:00 UTC is still the previous day eight hours west.
  EXPECT_EQ(local_date(midnight_utc + 7 * 3600, -8 * 3600), make_date(2025, 2, 28));
  EXPECT_EQ(local_midnight(make_date(2025, 3, 1), -8 * 3600), midnight_utc + 8 * 3600);
  EXPECT_EQ(local_midnight(make_date(2025, 3, 1), 2 * 3600), midnight_utc - 2 * 3600);
}

TEST(Calendar, IsoFormatting) {
  EXPECT_EQ(to_iso(make_date(2025, 3, 9)), "2025-03-09");
  EXPECT_EQ(to_iso_utc(0), "1970-01-01T00:00:00Z");
  EXPECT_EQ(to_iso_utc(1748736000 + 6 * 3600 + 15 * 60), "2025-06-01T06:15:00Z");
}

TEST(Calendar, ParseTimestampForms) {
  EXPECT_EQ(parse_timestamp("1748736000"), 1748736000);
  EXPECT_EQ(parse_timestamp("2025-06-01"), 1748736000);
  EXPECT_EQ(parse_timestamp("2025-06-01T06:15Z"), 1748736000 + 22500);
  EXPECT_EQ(parse_timestamp("2025-06-01T06:15:30Z"), 1748736000 + 22530);
  EXPECT_THROW(parse_timestamp("2025-06-01T06:15:30"), Error);
  EXPECT_THROW(parse_timestamp("2025-06-01T24:00Z"), Error);
  EXPECT_THROW(parse_timestamp("12a"), Error);
}
