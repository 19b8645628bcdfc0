#include "vinesense/reading.hpp"

#include <cmath>

namespace vinesense {

std::string_view to_string(SensorKind kind) noexcept {
  switch (kind) {
    case SensorKind::temperature: return "temperature";
    case SensorKind::relative_humidity: return "relative_humidity";
    case SensorKind::pressure: return "pressure";
    case SensorKind::solar_radiation: return "solar_radiation";
    case SensorKind::wind_speed: return "wind_speed";
    case SensorKind::wind_direction: return "wind_direction";
    case SensorKind::rain: return "rain";
    case SensorKind::leaf_wetness: return "leaf_wetness";
    case SensorKind::soil_moisture: return "soil_moisture";
    case SensorKind::temperature_elevated: return "temperature_elevated";
    case SensorKind::nir_reflectance: return "nir_reflectance";
    case SensorKind::red_reflectance: return "red_reflectance";
    case SensorKind::uv_index: return "uv_index";
    case SensorKind::irrigation_applied: return "irrigation_applied";
  }
  return "unknown";
}

std::optional<SensorKind> sensor_kind_from_string(std::string_view name) noexcept {
  for (SensorKind k : kAllSensorKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::optional<std::string> check_reading(const Reading& r) {
  if (r.timestamp <= 0) return "timestamp must be positive";
  if (r.station_id.empty()) return "empty station id";
  if (r.quality == Quality::missing) return std::nullopt;
  if (!std::isfinite(r.value)) return "non-finite value";
  const auto name = std::string(to_string(r.kind));
  switch (r.kind) {
    case SensorKind::relative_humidity:
    case SensorKind::soil_moisture:
      if (r.value < 0.0 || r.value > 100.0) return name + " outside [0,100]";
      break;
    case SensorKind::leaf_wetness:
      if (r.value < 0.0 || r.value > 100.0) return name + " outside [0,100]";
      break;
    case SensorKind::rain:
    case SensorKind::wind_speed:
    case SensorKind::solar_radiation:
    case SensorKind::uv_index:
    case SensorKind::irrigation_applied:
      if (r.value < 0.0) return name + " must be non-negative";
      break;
    case SensorKind::pressure:
      if (r.value <= 0.0) return name + " must be positive";
      break;
    case SensorKind::wind_direction:
      if (r.value < 0.0 || r.value >= 360.0) return name + " outside [0,360)";
      break;
    case SensorKind::nir_reflectance:
    case SensorKind::red_reflectance:
      if (r.value < 0.0 || r.value > 1.0) return name + " outside [0,1]";
      break;
    case SensorKind::temperature:
    case SensorKind::temperature_elevated:
      if (r.value < -90.0 || r.value > 70.0) return name + " outside plausible range";
      break;
  }
  return std::nullopt;
}

}  // namespace vinesense
