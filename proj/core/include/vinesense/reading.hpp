#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "vinesense/calendar.hpp"

namespace vinesense {

enum class SensorKind {
  temperature,           // °C
  relative_humidity,     // %
  pressure,              // kPa
  solar_radiation,       // W/m²
  wind_speed,            // m/s
  wind_direction,        // degrees from north, direction the wind blows from
  rain,                  // mm per interval
  leaf_wetness,          // % or 0/1
  soil_moisture,         // %VWC
  temperature_elevated,  // °C, pole-mounted sensor
  nir_reflectance,       // [0,1]
  red_reflectance,       // [0,1]
  uv_index,
  irrigation_applied,    // mm, completed irrigation reported by a controller
};

inline constexpr std::array kAllSensorKinds = {
    SensorKind::temperature,     SensorKind::relative_humidity,
    SensorKind::pressure,        SensorKind::solar_radiation,
    SensorKind::wind_speed,      SensorKind::wind_direction,
    SensorKind::rain,            SensorKind::leaf_wetness,
    SensorKind::soil_moisture,   SensorKind::temperature_elevated,
    SensorKind::nir_reflectance, SensorKind::red_reflectance,
    SensorKind::uv_index,        SensorKind::irrigation_applied,
};

std::string_view to_string(SensorKind kind) noexcept;
std::optional<SensorKind> sensor_kind_from_string(std::string_view name) noexcept;

enum class Quality { ok, suspect, missing };

struct Reading {
  EpochSeconds timestamp = 0;
  std::string station_id;
  SensorKind kind = SensorKind::temperature;
  double value = 0.0;
  Quality quality = Quality::ok;

  bool operator==(const Reading&) const = default;
};

/// Empty when the reading satisfies the per-kind invariants; otherwise a
/// short reason ("relative_humidity outside [0,100]").
std::optional<std::string> check_reading(const Reading& r);

}  // namespace vinesense
