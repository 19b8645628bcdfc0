#include "vinesense/agromet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vinesense/error.hpp"

namespace vinesense::agromet {

namespace {

constexpr double kAlbedo = 0.23;
constexpr double kStefanBoltzmann = 4.903e-9;  // MJ K⁻⁴ m⁻² day⁻¹
constexpr double kSolarConstant = 0.0820;      // MJ m⁻² min⁻¹

double require(const std::optional<double>& field, const char* name) {
  if (!field) {
    throw Error(ErrorCode::incomplete_input, std::string("missing required field: ") + name);
  }
  return *field;
}

}  // namespace

void validate(const DailySummary& day) {
  if (day.t_min && day.t_max && *day.t_min > *day.t_max) {
    throw Error(ErrorCode::invalid_summary, "t_min exceeds t_max on " + to_iso(day.date));
  }
  if (day.rh_min && day.rh_max && *day.rh_min > *day.rh_max) {
    throw Error(ErrorCode::invalid_summary, "rh_min exceeds rh_max on " + to_iso(day.date));
  }
  if (day.rh_mean && ((day.rh_min && *day.rh_mean < *day.rh_min) ||
                      (day.rh_max && *day.rh_mean > *day.rh_max))) {
    throw Error(ErrorCode::invalid_summary, "rh_mean outside [rh_min, rh_max] on " + to_iso(day.date));
  }
  if ((day.solar_mj && *day.solar_mj < 0.0) || (day.rain_mm && *day.rain_mm < 0.0)) {
    throw Error(ErrorCode::invalid_summary, "negative solar or rain on " + to_iso(day.date));
  }
}

double dew_point(double t_c, double rh_pct) {
  if (!(rh_pct > 0.0) || rh_pct > 100.0) {
    throw Error(ErrorCode::domain, "relative humidity must lie in (0, 100]");
  }
  if (rh_pct == 100.0) return t_c;
  const double g = std::log(rh_pct / 100.0) + kMagnusA * t_c / (kMagnusB + t_c);
  return kMagnusB * g / (kMagnusA - g);
}

double saturation_vapour_pressure(double t_c) {
  return 0.6108 * std::exp(17.27 * t_c / (t_c + 237.3));
}

double pressure_from_elevation(double elevation_m) {
  return 101.3 * std::pow((293.0 - 0.0065 * elevation_m) / 293.0, 5.26);
}

double extraterrestrial_radiation(double latitude_deg, int day_of_year) {
  using std::numbers::pi;
  const double phi = latitude_deg * pi / 180.0;
  const double dr = 1.0 + 0.033 * std::cos(2.0 * pi / 365.0 * day_of_year);
  const double decl = 0.409 * std::sin(2.0 * pi / 365.0 * day_of_year - 1.39);
  // Clamp for polar day/night.
  const double x = std::clamp(-std::tan(phi) * std::tan(decl), -1.0, 1.0);
  const double ws = std::acos(x);
  return 24.0 * 60.0 / pi * kSolarConstant * dr *
         (ws * std::sin(phi) * std::sin(decl) + std::cos(phi) * std::cos(decl) * std::sin(ws));
}

PenmanMonteithTerms penman_monteith_terms(const DailySummary& day, double latitude_deg,
                                          int day_of_year, double elevation_m) {
  validate(day);
  const double t_min = require(day.t_min, "t_min");
  const double t_max = require(day.t_max, "t_max");
  double ea = 0.0;
  if (day.rh_min && day.rh_max) {
    ea = (saturation_vapour_pressure(t_min) * *day.rh_max / 100.0 +
          saturation_vapour_pressure(t_max) * *day.rh_min / 100.0) /
         2.0;
  }
  const double es = (saturation_vapour_pressure(t_max) + saturation_vapour_pressure(t_min)) / 2.0;
  if (!(day.rh_min && day.rh_max)) {
    ea = require(day.rh_mean, "rh_mean") / 100.0 * es;
  }
  const double u2 = require(day.wind_mean_2m, "wind_mean_2m");
  const double rs = require(day.solar_mj, "solar_mj");

  PenmanMonteithTerms t;
  t.t_mean = (t_min + t_max) / 2.0;
  t.wind_2m = u2;
  t.es = es;
  t.ea = ea;
  t.delta = 4098.0 * saturation_vapour_pressure(t.t_mean) / ((t.t_mean + 237.3) * (t.t_mean + 237.3));
  const double p = day.pressure_kpa ? *day.pressure_kpa : pressure_from_elevation(elevation_m);
  t.gamma = 0.000665 * p;

  const double ra = extraterrestrial_radiation(latitude_deg, day_of_year);
  const double rso = (0.75 + 2e-5 * elevation_m) * ra;
  const double rns = (1.0 - kAlbedo) * rs;
  const double tk4 = (std::pow(t_max + 273.16, 4) + std::pow(t_min + 273.16, 4)) / 2.0;
  const double ratio = rso > 0.0 ? std::min(rs / rso, 1.0) : 0.0;
  const double rnl = kStefanBoltzmann * tk4 * (0.34 - 0.14 * std::sqrt(ea)) * (1.35 * ratio - 0.35);
  t.net_radiation = rns - rnl;
  t.soil_heat_flux = 0.0;
  return t;
}

double penman_monteith(const PenmanMonteithTerms& t) {
  const double num = 0.408 * t.delta * (t.net_radiation - t.soil_heat_flux) +
                     t.gamma * 900.0 / (t.t_mean + 273.0) * t.wind_2m * (t.es - t.ea);
  const double den = t.delta + t.gamma * (1.0 + 0.34 * t.wind_2m);
  return std::max(0.0, num / den);
}

double et0_daily(const DailySummary& day, double latitude_deg, int day_of_year,
                 double elevation_m) {
  return penman_monteith(penman_monteith_terms(day, latitude_deg, day_of_year, elevation_m));
}

double gdd_daily(double t_min, double t_max, double base, std::optional<double> upper_cap) {
  if (t_min > t_max) {
    throw Error(ErrorCode::invalid_summary, "t_min exceeds t_max");
  }
  const double hi = upper_cap ? std::min(t_max, *upper_cap) : t_max;
  return std::max(0.0, (t_min + hi) / 2.0 - base);
}

std::vector<GddPoint> accumulate_gdd(std::span<const DailySummary> days, double base,
                                     const Date& season_start, std::optional<double> upper_cap) {
  std::vector<GddPoint> out;
  out.reserve(days.size());
  double total = 0.0;
  for (std::size_t i = 0; i < days.size(); ++i) {
    const DailySummary& d = days[i];
    if (d.date < season_start) {
      throw Error(ErrorCode::ordering, to_iso(d.date) + " precedes season start " + to_iso(season_start));
    }
    if (i > 0 && !(days[i - 1].date < d.date)) {
      throw Error(ErrorCode::ordering, "days not strictly increasing at " + to_iso(d.date));
    }
    total += gdd_daily(require(d.t_min, "t_min"), require(d.t_max, "t_max"), base, upper_cap);
    out.push_back({d.date, total});
  }
  return out;
}

ChillHours chill_hours(std::span<const std::optional<double>> hourly_temps) {
  ChillHours c;
  for (const auto& t : hourly_temps) {
    if (!t) {
      ++c.missing_hours;
    } else if (*t >= 0.0 && *t <= 7.0) {
      ++c.hours;
    }
  }
  return c;
}

ChillBandTable::ChillBandTable(std::vector<ChillBand> bands) : bands_(std::move(bands)) {
  for (std::size_t i = 0; i < bands_.size(); ++i) {
    if (!(bands_[i].low < bands_[i].high) || std::isnan(bands_[i].weight)) {
      throw Error(ErrorCode::configuration, "chill band with low >= high");
    }
    if (i > 0 && bands_[i].low < bands_[i - 1].high) {
      throw Error(ErrorCode::configuration, "chill bands overlap or are unordered");
    }
  }
}

ChillBandTable ChillBandTable::utah() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return ChillBandTable({
      {-inf, 1.4, 0.0},
      {1.4, 2.4, 0.5},
      {2.4, 9.1, 1.0},
      {9.1, 12.4, 0.5},
      {12.4, 15.9, 0.0},
      {15.9, 18.0, -0.5},
      {18.0, inf, -1.0},
  });
}

double ChillBandTable::weight(double t_c) const noexcept {
  // First band whose upper bound is not below t.
  auto it = std::lower_bound(bands_.begin(), bands_.end(), t_c,
                             [](const ChillBand& b, double t) { return b.high < t; });
  if (it != bands_.end() && it->low < t_c) return it->weight;
  return 0.0;
}

ChillUnits utah_units(std::span<const std::optional<double>> hourly_temps,
                      const ChillBandTable& table) {
  ChillUnits u;
  for (const auto& t : hourly_temps) {
    if (!t) {
      ++u.missing_hours;
    } else {
      u.units += table.weight(*t);
    }
  }
  return u;
}

double heat_index(double t_c, double rh_pct) {
  if (t_c < kHeatIndexThresholdC) return t_c;
  const double t = t_c * 9.0 / 5.0 + 32.0;
  const double rh = rh_pct;
  const double hi = -42.379 + 2.04901523 * t + 10.14333127 * rh - 0.22475541 * t * rh -
                    0.00683783 * t * t - 0.05481717 * rh * rh + 0.00122874 * t * t * rh +
                    0.00085282 * t * rh * rh - 0.00000199 * t * t * rh * rh;
  return std::max(t_c, (hi - 32.0) * 5.0 / 9.0);
}

double ndvi(double nir, double red) {
  if (nir < 0.0 || nir > 1.0 || red < 0.0 || red > 1.0) {
    throw Error(ErrorCode::domain, "reflectance outside [0, 1]");
  }
  if (nir + red == 0.0) {
    throw Error(ErrorCode::undefined_index, "NDVI undefined when nir and red are both zero");
  }
  return (nir - red) / (nir + red);
}

double inversion_strength(const TimedValue& elevated, const TimedValue& ground,
                          EpochSeconds tolerance_s) {
  const EpochSeconds gap = elevated.timestamp > ground.timestamp
                               ? elevated.timestamp - ground.timestamp
                               : ground.timestamp - elevated.timestamp;
  if (gap > tolerance_s) {
    throw Error(ErrorCode::pairing, "elevated and ground readings are " + std::to_string(gap) +
                                        " s apart");
  }
  return elevated.value - ground.value;
}

double leaf_wetness_hours(std::span<const TimedValue> series, double threshold) {
  EpochSeconds wet_seconds = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    EpochSeconds span = kTickSeconds;
    if (i + 1 < series.size()) {
      const EpochSeconds gap = series[i + 1].timestamp - series[i].timestamp;
      if (gap < 0) throw Error(ErrorCode::ordering, "leaf wetness series not sorted");
      span = std::min(span, gap);
    }
    if (series[i].value >= threshold) wet_seconds += span;
  }
  return static_cast<double>(wet_seconds) / kSecondsPerHour;
}

}  // namespace vinesense::agromet
