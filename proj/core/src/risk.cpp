#include "vinesense/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vinesense/error.hpp"

namespace vinesense::risk {

std::string_view to_string(Band band) noexcept {
  switch (band) {
    case Band::low: return "low";
    case Band::moderate: return "moderate";
    case Band::high: return "high";
  }
  return "unknown";
}

Band BandThresholds::classify(double value) const noexcept {
  if (value < moderate_from) return Band::low;
  if (value <= high_above) return Band::moderate;
  return Band::high;
}

bool powdery_mildew_day_qualifies(const agromet::HourlyTemps& day, const PowderyMildewConfig& cfg) {
  int hours = 0;
  for (const auto& t : day) {
    if (t && *t >= cfg.favorable_low && *t <= cfg.favorable_high) ++hours;
  }
  return hours >= cfg.min_favorable_hours;
}

PowderyMildewState powdery_mildew_step(PowderyMildewState s, bool qualifying,
                                       const PowderyMildewConfig& cfg) {
  s.consecutive_favorable = qualifying ? s.consecutive_favorable + 1 : 0;
  if (!s.initiated) {
    if (s.consecutive_favorable >= cfg.onset_days) {
      s.initiated = true;
      s.index = std::min(100.0, cfg.increment * cfg.onset_days);
    }
    return s;
  }
  s.index = std::clamp(s.index + (qualifying ? cfg.increment : -cfg.decrement), 0.0, 100.0);
  return s;
}

RiskScore powdery_mildew_index(std::span<const agromet::HourlyTemps> days,
                               std::optional<double> prior_index, const PowderyMildewConfig& cfg) {
  PowderyMildewState s;
  if (prior_index) {
    s.initiated = true;
    s.index = std::clamp(*prior_index, 0.0, 100.0);
  }
  for (const auto& day : days) {
    s = powdery_mildew_step(s, powdery_mildew_day_qualifies(day, cfg), cfg);
  }
  RiskScore r;
  r.kind = "powdery_mildew";
  r.value = s.index;
  r.band = cfg.bands.classify(s.index);
  if (!s.initiated) r.flags.push_back("not initiated");
  return r;
}

RiskScore downy_mildew_risk(const agromet::DailySummary& day, std::optional<double> leaf_wetness_h,
                            const DownyMildewConfig& cfg) {
  RiskScore r;
  r.kind = "downy_mildew";
  r.as_of = day.date;
  int held = 0;
  if (day.t_min && day.t_max && (*day.t_min + *day.t_max) / 2.0 >= cfg.min_t_mean) ++held;
  if (day.rain_mm && *day.rain_mm >= cfg.min_rain_mm) ++held;
  if (leaf_wetness_h) {
    if (*leaf_wetness_h >= cfg.min_wet_hours) ++held;
  } else {
    r.flags.push_back("degraded: leaf wetness unavailable");
  }
  if (!day.t_min || !day.t_max) r.flags.push_back("degraded: temperature unavailable");
  if (!day.rain_mm) r.flags.push_back("degraded: rain unavailable");
  r.value = 100.0 * held / 3.0;
  r.band = held == 3 ? Band::high : held == 2 ? Band::moderate : Band::low;
  return r;
}

RiskScore botrytis_flag(double wet_hours, double t_mean, const BotrytisConfig& cfg) {
  RiskScore r;
  r.kind = "botrytis_flag";
  const bool elevated = wet_hours >= cfg.min_wet_hours && t_mean >= cfg.t_low && t_mean <= cfg.t_high;
  r.value = elevated ? 100.0 : 0.0;
  r.band = elevated ? Band::high : Band::low;
  return r;
}

void validate(const InsectModel& model) {
  for (std::size_t i = 1; i < model.stage_thresholds.size(); ++i) {
    if (!(model.stage_thresholds[i - 1].first < model.stage_thresholds[i].first)) {
      throw Error(ErrorCode::configuration, model.species + ": thresholds must strictly increase");
    }
  }
}

InsectModel grape_berry_moth() {
  return {"grape_berry_moth",
          8.9,
          {{450.0, "second_generation_flight"},
           {900.0, "third_generation_flight"},
           {1350.0, "fourth_generation_flight"}},
          "calendar:03-01"};
}

Date default_biofix(int year) { return make_date(year, 3, 1); }

InsectStage insect_stage(double cumulative_dd, const InsectModel& model) {
  InsectStage out;
  for (const auto& [dd, name] : model.stage_thresholds) {
    if (dd <= cumulative_dd) {
      out.stage = name;
    } else {
      out.distance_to_next = dd - cumulative_dd;
      break;
    }
  }
  return out;
}

std::string_view to_string(Reach reach) noexcept {
  switch (reach) {
    case Reach::short_range: return "short";
    case Reach::medium_range: return "medium";
    case Reach::long_range: return "long";
  }
  return "unknown";
}

std::optional<SpreadSector> wind_spread_sector(std::span<const WindSample> series,
                                               const std::string& origin,
                                               const WindSpreadConfig& cfg) {
  if (series.empty()) throw Error(ErrorCode::validation, "empty wind series");
  constexpr double kRad = std::numbers::pi / 180.0;
  double c = 0.0;
  double s = 0.0;
  double weight = 0.0;
  double speed_sum = 0.0;
  bool any_wind = false;
  for (const auto& w : series) {
    speed_sum += w.speed;
    if (w.speed < cfg.calm_below) continue;
    any_wind = true;
    const double downwind = (w.direction + 180.0) * kRad;
    c += w.speed * std::cos(downwind);
    s += w.speed * std::sin(downwind);
    weight += w.speed;
  }
  if (!any_wind) return std::nullopt;

  SpreadSector out;
  out.origin = origin;
  double center = std::atan2(s, c) / kRad;
  if (center < 0.0) center += 360.0;
  if (center >= 360.0) center -= 360.0;
  out.center_bearing = center;
  const double resultant = std::hypot(c, s) / weight;
  const double width = resultant > 0.0 ? std::sqrt(-2.0 * std::log(std::min(resultant, 1.0))) / kRad
                                       : cfg.max_width;
  out.angular_width = std::clamp(width, cfg.min_width, cfg.max_width);
  out.mean_speed = speed_sum / static_cast<double>(series.size());
  out.reach = out.mean_speed >= cfg.long_from     ? Reach::long_range
              : out.mean_speed >= cfg.medium_from ? Reach::medium_range
                                                  : Reach::short_range;
  return out;
}

std::string_view to_string(FrostSeverity s) noexcept {
  switch (s) {
    case FrostSeverity::none: return "none";
    case FrostSeverity::watch: return "watch";
    case FrostSeverity::warning: return "warning";
    case FrostSeverity::severe: return "severe";
  }
  return "unknown";
}

std::string_view to_string(Mitigation m) noexcept {
  switch (m) {
    case Mitigation::wind_machine: return "wind_machine";
    case Mitigation::sprinkler: return "sprinkler";
    case Mitigation::heater: return "heater";
    case Mitigation::none_effective: return "none_effective";
  }
  return "unknown";
}

FrostAssessment frost_risk(double forecast_tmin, double current_dew_point,
                           std::optional<double> wind_mean, std::optional<double> inversion,
                           const FrostConfig& cfg) {
  FrostAssessment a;
  a.forecast_tmin = forecast_tmin;
  a.dew_point_spread = forecast_tmin - current_dew_point;
  a.inversion_strength = inversion;
  a.wind_mean = wind_mean;
  if (forecast_tmin <= cfg.severe_at_or_below) {
    a.severity = FrostSeverity::severe;
  } else if (forecast_tmin <= cfg.warning_at_or_below) {
    a.severity = FrostSeverity::warning;
  } else if (forecast_tmin <= cfg.watch_at_or_below) {
    a.severity = FrostSeverity::watch;
  } else {
    return a;
  }
  if (inversion && *inversion >= cfg.wind_machine_min_inversion) {
    a.advice.push_back(Mitigation::wind_machine);
  }
  if (forecast_tmin >= cfg.sprinkler_floor) a.advice.push_back(Mitigation::sprinkler);
  if (a.advice.empty() && a.severity >= FrostSeverity::warning) {
    a.advice.push_back(Mitigation::none_effective);
  }
  return a;
}

std::vector<TimeWindow> spray_windows(std::span<const HourlyConditions> forecast, double max_wind,
                                      double max_rain_prob, double min_window_h) {
  std::vector<TimeWindow> out;
  const auto min_len = static_cast<EpochSeconds>(std::llround(min_window_h * kSecondsPerHour));
  std::optional<TimeWindow> run;
  auto close = [&] {
    if (run && run->end - run->start >= min_len) out.push_back(*run);
    run.reset();
  };
  for (std::size_t i = 0; i < forecast.size(); ++i) {
    const auto& h = forecast[i];
    if (i > 0 && h.time < forecast[i - 1].time) {
      throw Error(ErrorCode::ordering, "forecast hours not sorted");
    }
    const bool ok = h.wind <= max_wind && h.rain_prob <= max_rain_prob;
    if (!ok || (run && h.time != run->end)) close();
    if (!ok) continue;
    if (!run) run = TimeWindow{h.time, h.time};
    run->end = h.time + kSecondsPerHour;
  }
  close();
  return out;
}

}  // namespace vinesense::risk
