#pragma once

// Derived agrometeorological quantities. Every function here is pure.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vinesense/calendar.hpp"

namespace vinesense::agromet {

using HourlyTemps = std::array<std::optional<double>, 24>;

/// Per-day aggregates for one station. Fields are optional because a day
/// assembled from telemetry can be missing any sensor; functions that need
/// a field report it by name.
struct DailySummary {
  Date date{};
  std::optional<double> t_min;         // °C
  std::optional<double> t_max;         // °C
  std::optional<double> rh_mean;       // %
  std::optional<double> rh_min;        // %
  std::optional<double> rh_max;        // %
  std::optional<double> wind_mean_2m;  // m/s
  std::optional<double> solar_mj;      // MJ/m²/day
  std::optional<double> rain_mm;       // mm
  std::optional<double> pressure_kpa;  // kPa
  HourlyTemps hourly_temps{};          // local hours 0..23, nullopt = missing

  bool operator==(const DailySummary&) const = default;
};

/// Throws invalid_summary when t_min > t_max, rh_min > rh_mean > rh_max, or
/// solar/rain are negative.
void validate(const DailySummary& day);

// ---------------------------------------------------------------- dew point

inline constexpr double kMagnusA = 17.625;
inline constexpr double kMagnusB = 243.04;  // °C

/// Magnus approximation. rh_pct must lie in (0, 100].
double dew_point(double t_c, double rh_pct);

// ---------------------------------------------------------------- ET0

/// Already-evaluated terms of the daily FAO-56 Penman-Monteith equation.
struct PenmanMonteithTerms {
  double delta = 0.0;        // slope of vapour pressure curve, kPa/°C
  double gamma = 0.0;        // psychrometric constant, kPa/°C
  double net_radiation = 0.0;  // Rn, MJ/m²/day
  double soil_heat_flux = 0.0;  // G, MJ/m²/day
  double t_mean = 0.0;       // °C
  double wind_2m = 0.0;      // m/s
  double es = 0.0;           // saturation vapour pressure, kPa
  double ea = 0.0;           // actual vapour pressure, kPa
};

/// ET0 in mm/day from precomputed terms; clamped at zero.
double penman_monteith(const PenmanMonteithTerms& terms);

double saturation_vapour_pressure(double t_c);
double pressure_from_elevation(double elevation_m);
/// Extraterrestrial radiation Ra, MJ/m²/day.
double extraterrestrial_radiation(double latitude_deg, int day_of_year);

/// Builds the Penman-Monteith terms for a day (albedo 0.23, G = 0).
PenmanMonteithTerms penman_monteith_terms(const DailySummary& day, double latitude_deg,
                                          int day_of_year, double elevation_m);

/// Reference evapotranspiration, mm/day. Throws incomplete_input naming the
/// first missing field (t_min, t_max, humidity, wind_mean_2m, solar_mj).
double et0_daily(const DailySummary& day, double latitude_deg, int day_of_year,
                 double elevation_m);

// ---------------------------------------------------------------- GDD

inline constexpr double kDefaultGddBase = 10.0;

/// Simple-average degree-days clamped at zero. With an upper cap, t_max is
/// replaced by min(t_max, cap) before averaging.
double gdd_daily(double t_min, double t_max, double base = kDefaultGddBase,
                 std::optional<double> upper_cap = std::nullopt);

struct GddPoint {
  Date date{};
  double cumulative = 0.0;

  bool operator==(const GddPoint&) const = default;
};

/// Running GDD sum from `season_start`. Days must be strictly increasing and
/// not precede the season start (ordering error otherwise).
std::vector<GddPoint> accumulate_gdd(std::span<const DailySummary> days, double base,
                                     const Date& season_start,
                                     std::optional<double> upper_cap = std::nullopt);

// ---------------------------------------------------------------- chill

struct ChillHours {
  int hours = 0;
  int missing_hours = 0;
};

/// Hours with 0 ≤ t ≤ 7 °C. Missing slots are counted separately, not
/// interpolated.
ChillHours chill_hours(std::span<const std::optional<double>> hourly_temps);

struct ChillBand {
  double low = 0.0;   // exclusive
  double high = 0.0;  // inclusive
  double weight = 0.0;
};

/// Ordered, non-overlapping (low, high] bands; temperatures outside every
/// band weigh zero.
class ChillBandTable {
 public:
  explicit ChillBandTable(std::vector<ChillBand> bands);

  /// Richardson (Utah) model.
  static ChillBandTable utah();

  double weight(double t_c) const noexcept;
  const std::vector<ChillBand>& bands() const noexcept { return bands_; }

 private:
  std::vector<ChillBand> bands_;
};

struct ChillUnits {
  double units = 0.0;
  int missing_hours = 0;
};

ChillUnits utah_units(std::span<const std::optional<double>> hourly_temps,
                      const ChillBandTable& table = ChillBandTable::utah());

// ---------------------------------------------------------------- misc

inline constexpr double kHeatIndexThresholdC = 26.7;

/// NOAA Rothfusz regression; returns t_c unchanged below 26.7 °C and never
/// less than t_c above it.
double heat_index(double t_c, double rh_pct);

double ndvi(double nir, double red);

struct TimedValue {
  EpochSeconds timestamp = 0;
  double value = 0.0;
};

inline constexpr EpochSeconds kInversionPairingTolerance = 60;

/// elevated − ground; positive means an inversion. Throws pairing when the
/// two readings are more than `tolerance_s` apart.
double inversion_strength(const TimedValue& elevated, const TimedValue& ground,
                          EpochSeconds tolerance_s = kInversionPairingTolerance);

/// Hours with wetness ≥ threshold. Each sample covers the 15-minute interval
/// that starts at its timestamp, truncated at the next sample.
double leaf_wetness_hours(std::span<const TimedValue> series, double threshold);

}  // namespace vinesense::agromet
