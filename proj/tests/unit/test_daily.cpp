#include <gtest/gtest.h>

#include "vinesense/daily.hpp"

using namespace vinesense;
using namespace vinesense::agromet;

namespace {

StationSamples constant_day(const Date& date, std::int32_t offset, double t_lo, double t_hi) {
  StationSamples s;
  const EpochSeconds start = local_midnight(date, offset);
  for (int i = 0; i < kTicksPerDay; ++i) {
    const EpochSeconds ts = start + i * kTickSeconds;
    s[SensorKind::temperature].push_back(Sample::point(ts, i < 48 ? t_lo : t_hi));
  }
  return s;
}

}  // namespace

TEST(Daily, SummaryUsesLocalDay) {
  const Date d = make_date(2025, 6, 1);
  StationSite site;
  site.utc_offset_s = -7 * 3600;
  auto samples = constant_day(d, site.utc_offset_s, 20.0, 30.0);
  // A reading just before local midnight belongs to the previous day.
  samples[SensorKind::temperature].insert(samples[SensorKind::temperature].begin(),
                                          Sample::point(local_midnight(d, site.utc_offset_s) - 1, -40.0));
  const auto sum = summarize_day(d, site, samples);
  EXPECT_EQ(sum.t_min, 20.0);
  EXPECT_EQ(sum.t_max, 30.0);
  EXPECT_EQ(sum.hourly_temps[0], 20.0);
  EXPECT_EQ(sum.hourly_temps[23], 30.0);
  EXPECT_FALSE(sum.rh_mean.has_value());
}

TEST(Daily, SolarMeanBecomesDailyEnergy) {
  const Date d = make_date(2025, 6, 1);
  StationSamples s;
  for (int i = 0; i < kTicksPerDay; ++i) {
    s[SensorKind::solar_radiation].push_back(Sample::point(local_midnight(d) + i * kTickSeconds, 250.0));
    s[SensorKind::rain].push_back(Sample::point(local_midnight(d) + i * kTickSeconds, i == 10 ? 3.5 : 0.0));
  }
  const auto sum = summarize_day(d, StationSite{}, s);
  EXPECT_NEAR(*sum.solar_mj, 21.6, 1e-9);
  EXPECT_DOUBLE_EQ(*sum.rain_mm, 3.5);
}

TEST(Daily, WindConvertedToTwoMetres) {
  EXPECT_EQ(wind_at_2m(3.0, 2.0), 3.0);
  // FAO-56 Example 14: 3.2 m/s at 10 m is 2.4 m/s at 2 m.
  EXPECT_NEAR(wind_at_2m(3.2, 10.0), 2.4, 0.01);
}

TEST(Daily, MetricsGddAndGaps) {
  const Date d = make_date(2025, 6, 1);
  const auto sum = summarize_day(d, StationSite{}, constant_day(d, 0, 20.0, 30.0));
  const auto m = compute_daily_metrics(sum, StationSite{}, MetricsConfig{});
  EXPECT_DOUBLE_EQ(*m.gdd, 15.0);
  EXPECT_FALSE(m.dew_point.has_value());
  EXPECT_FALSE(m.et0.has_value());
  const std::vector<DailyMetrics> rows{m};
  const std::string table = render_metrics_table(rows);
  EXPECT_NE(table.find("15.0"), std::string::npos);
  // tmin, tmax and gdd are present; dew point, et0, rain and wetness are gaps.
  const std::string row = table.substr(table.find('\n') + 1);
  std::size_t gaps = 0;
  for (std::size_t p = row.find(kGapMarker); p != std::string::npos; p = row.find(kGapMarker, p + 2)) ++gaps;
  EXPECT_EQ(gaps, 4u);
}

TEST(Daily, EmptyDayIsAllGaps) {
  DailySummary empty;
  empty.date = make_date(2025, 6, 2);
  const auto m = compute_daily_metrics(empty, StationSite{}, MetricsConfig{});
  EXPECT_FALSE(m.gdd.has_value());
  EXPECT_EQ(m.chill.missing_hours, 24);
  const std::vector<DailyMetrics> rows{m};
  const std::string table = render_metrics_table(rows);
  const std::string row = table.substr(table.find('\n') + 1);
  std::size_t gaps = 0;
  for (std::size_t p = row.find(kGapMarker); p != std::string::npos; p = row.find(kGapMarker, p + 2)) ++gaps;
  EXPECT_EQ(gaps, 9u);
}

TEST(Daily, WetHoursFromRawAndArchived) {
  std::vector<Sample> raw{Sample::point(0, 100), Sample::point(900, 100), Sample::point(1800, 0)};
  EXPECT_DOUBLE_EQ(*wet_hours(raw, 50.0), 0.5);
  std::vector<Sample> buckets{{0, 100, 100, 400, 4}, {3600, 0, 100, 100, 4}};
  EXPECT_DOUBLE_EQ(*wet_hours(buckets, 50.0), 1.0);
  EXPECT_FALSE(wet_hours({}, 50.0).has_value());
}
