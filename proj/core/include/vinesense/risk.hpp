#pragma once

// Disease pressure, insect degree-day stages, wind spread, frost and spray
// windows. All functions are pure; any running state (the powdery-mildew
// index) is passed in and returned explicitly.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vinesense/agromet.hpp"
#include "vinesense/calendar.hpp"

namespace vinesense::risk {

enum class Band { low, moderate, high };
std::string_view to_string(Band band) noexcept;

/// low < moderate_from ≤ moderate ≤ high_above < high
struct BandThresholds {
  double moderate_from = 40.0;
  double high_above = 60.0;

  Band classify(double value) const noexcept;
};

struct RiskScore {
  std::string kind;  // powdery_mildew, downy_mildew, botrytis_flag, insect:<species>
  double value = 0.0;
  Band band = Band::low;
  Date as_of{};
  std::string station_id;
  std::vector<std::string> flags;  // e.g. "degraded: leaf wetness unavailable"
};

// ------------------------------------------------------------ powdery mildew

struct PowderyMildewConfig {
  double favorable_low = 21.0;   // °C
  double favorable_high = 30.0;  // °C
  int min_favorable_hours = 6;
  int onset_days = 3;
  double increment = 20.0;
  double decrement = 10.0;
  BandThresholds bands{};
};

struct PowderyMildewState {
  bool initiated = false;
  int consecutive_favorable = 0;
  double index = 0.0;
};

bool powdery_mildew_day_qualifies(const agromet::HourlyTemps& day, const PowderyMildewConfig& cfg);
PowderyMildewState powdery_mildew_step(PowderyMildewState state, bool qualifying,
                                       const PowderyMildewConfig& cfg);

/// A prior index means the epidemic has already been initiated.
RiskScore powdery_mildew_index(std::span<const agromet::HourlyTemps> days,
                               std::optional<double> prior_index,
                               const PowderyMildewConfig& cfg = {});

// ------------------------------------------------------------ downy mildew

struct DownyMildewConfig {
  double min_t_mean = 10.0;      // °C
  double min_rain_mm = 10.0;     // mm
  double min_wet_hours = 10.0;   // h
};

/// Classical 10-10-24 rule; a missing leaf-wetness value is treated as not
/// satisfied and flagged as degraded.
RiskScore downy_mildew_risk(const agromet::DailySummary& day, std::optional<double> leaf_wetness_h,
                            const DownyMildewConfig& cfg = {});

struct BotrytisConfig {
  double min_wet_hours = 12.0;
  double t_low = 15.0;
  double t_high = 25.0;
};

RiskScore botrytis_flag(double wet_hours, double t_mean, const BotrytisConfig& cfg = {});

// ------------------------------------------------------------ insects

struct InsectModel {
  std::string species;
  double base_temp = 10.0;
  std::vector<std::pair<double, std::string>> stage_thresholds;  // strictly increasing
  std::string biofix_rule;
};

void validate(const InsectModel& model);
InsectModel grape_berry_moth();

/// Default biofix for the calendar rule: March 1.
Date default_biofix(int year);

struct InsectStage {
  std::optional<std::string> stage;           // empty before the first threshold
  std::optional<double> distance_to_next;     // empty past the last threshold
};

InsectStage insect_stage(double cumulative_dd, const InsectModel& model);

// ------------------------------------------------------------ wind spread

enum class Reach { short_range, medium_range, long_range };
std::string_view to_string(Reach reach) noexcept;

struct WindSample {
  double speed = 0.0;      // m/s
  double direction = 0.0;  // degrees, direction the wind blows from
};

struct WindSpreadConfig {
  double calm_below = 0.5;   // m/s
  double medium_from = 2.0;  // m/s
  double long_from = 5.0;    // m/s
  double min_width = 30.0;   // degrees
  double max_width = 180.0;  // degrees
};

struct SpreadSector {
  std::string origin;
  double center_bearing = 0.0;  // downwind, degrees from north
  double angular_width = 0.0;   // degrees
  Reach reach = Reach::short_range;
  double mean_speed = 0.0;
};

/// Empty when every sample is calm. Throws validation on an empty series.
std::optional<SpreadSector> wind_spread_sector(std::span<const WindSample> series,
                                               const std::string& origin,
                                               const WindSpreadConfig& cfg = {});

// ------------------------------------------------------------ frost

enum class FrostSeverity { none, watch, warning, severe };
enum class Mitigation { wind_machine, sprinkler, heater, none_effective };
std::string_view to_string(FrostSeverity s) noexcept;
std::string_view to_string(Mitigation m) noexcept;

struct FrostConfig {
  double watch_at_or_below = 2.0;
  double warning_at_or_below = 0.0;
  double severe_at_or_below = -2.0;
  double wind_machine_min_inversion = 1.5;
  double sprinkler_floor = -4.0;
};

struct FrostAssessment {
  Date date{};
  FrostSeverity severity = FrostSeverity::none;
  double forecast_tmin = 0.0;
  double dew_point_spread = 0.0;
  std::optional<double> inversion_strength;
  std::optional<double> wind_mean;
  std::vector<Mitigation> advice;
};

FrostAssessment frost_risk(double forecast_tmin, double current_dew_point,
                           std::optional<double> wind_mean, std::optional<double> inversion,
                           const FrostConfig& cfg = {});

// ------------------------------------------------------------ spray windows

struct HourlyConditions {
  EpochSeconds time = 0;  // start of the hour
  double wind = 0.0;      // m/s
  double rain_prob = 0.0; // %
};

struct SprayConfig {
  double max_wind = 4.5;
  double max_rain_prob = 30.0;
  double min_window_h = 3.0;
};

struct TimeWindow {
  EpochSeconds start = 0;
  EpochSeconds end = 0;
  bool operator==(const TimeWindow&) const = default;
};

/// Maximal runs of consecutive hours that satisfy both limits and last at
/// least `min_window_h`. A gap in the hourly sequence ends a run.
std::vector<TimeWindow> spray_windows(std::span<const HourlyConditions> forecast, double max_wind,
                                      double max_rain_prob, double min_window_h);

}  // namespace vinesense::risk
