#pragma once

// Assembly of per-day summaries from telemetry samples and the daily metric
// table shared by the service and the command-line tool.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vinesense/agromet.hpp"
#include "vinesense/reading.hpp"
#include "vinesense/sample.hpp"

namespace vinesense::agromet {

struct StationSite {
  double latitude_deg = 38.5;
  double elevation_m = 50.0;
  std::int32_t utc_offset_s = 0;
  double wind_height_m = 2.0;
};

struct MetricsConfig {
  double gdd_base = kDefaultGddBase;
  std::optional<double> gdd_upper_cap;
  double leaf_wetness_threshold = 50.0;
  ChillBandTable chill_table = ChillBandTable::utah();
};

/// Samples of one station, keyed by sensor, each sorted by timestamp.
using StationSamples = std::map<SensorKind, std::vector<Sample>>;

/// Wind speed measured at `height_m` converted to the 2 m reference height.
double wind_at_2m(double speed, double height_m);

/// Builds the summary of local day `date` from samples that fall inside it.
/// Samples outside [local midnight, +24 h) are ignored.
DailySummary summarize_day(const Date& date, const StationSite& site, const StationSamples& samples);

/// Hours with leaf wetness ≥ threshold; archived buckets contribute 15 min per
/// summarised point when their mean is wet.
std::optional<double> wet_hours(std::span<const Sample> samples, double threshold);

struct DailyMetrics {
  Date date{};
  std::optional<double> t_min;
  std::optional<double> t_max;
  std::optional<double> dew_point;
  std::optional<double> et0;
  std::optional<double> gdd;
  std::optional<double> rain_mm;
  ChillHours chill;
  ChillUnits utah;
  std::optional<double> leaf_wetness_h;
};

DailyMetrics compute_daily_metrics(const DailySummary& day, const StationSite& site,
                                   const MetricsConfig& config,
                                   std::optional<double> leaf_wetness_h = std::nullopt);

inline constexpr const char* kGapMarker = "--";

/// Fixed-width text table, one row per day; missing values print as "--".
std::string render_metrics_table(std::span<const DailyMetrics> rows);

}  // namespace vinesense::agromet
