#include "vinesense/daily.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vinesense/error.hpp"

namespace vinesense::agromet {

double wind_at_2m(double speed, double height_m) {
  if (height_m == 2.0) return speed;
  return speed * 4.87 / std::log(67.8 * height_m - 5.42);
}

namespace {

struct Accumulator {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  std::uint64_t count = 0;

  void add(const Sample& s) {
    min = std::min(min, s.min);
    max = std::max(max, s.max);
    sum += s.sum;
    count += s.count;
  }
  bool empty() const { return count == 0; }
  double mean() const { return sum / static_cast<double>(count); }
};

template <typename Fn>
void for_each_in_day(const StationSamples& samples, SensorKind kind, EpochSeconds start, Fn&& fn) {
  auto it = samples.find(kind);
  if (it == samples.end()) return;
  const auto& v = it->second;
  auto lo = std::lower_bound(v.begin(), v.end(), start,
                             [](const Sample& s, EpochSeconds t) { return s.timestamp < t; });
  for (; lo != v.end() && lo->timestamp < start + kSecondsPerDay; ++lo) fn(*lo);
}

Accumulator accumulate(const StationSamples& samples, SensorKind kind, EpochSeconds start) {
  Accumulator acc;
  for_each_in_day(samples, kind, start, [&](const Sample& s) { acc.add(s); });
  return acc;
}

}  // namespace

DailySummary summarize_day(const Date& date, const StationSite& site, const StationSamples& samples) {
  const EpochSeconds start = local_midnight(date, site.utc_offset_s);
  DailySummary d;
  d.date = date;

  std::array<Accumulator, 24> hours;
  Accumulator temp;
  for_each_in_day(samples, SensorKind::temperature, start, [&](const Sample& s) {
    temp.add(s);
    hours[static_cast<std::size_t>((s.timestamp - start) / kSecondsPerHour)].add(s);
  });
  if (!temp.empty()) {
    d.t_min = temp.min;
    d.t_max = temp.max;
  }
  for (std::size_t h = 0; h < 24; ++h) {
    if (!hours[h].empty()) d.hourly_temps[h] = hours[h].mean();
  }

  if (auto rh = accumulate(samples, SensorKind::relative_humidity, start); !rh.empty()) {
    d.rh_min = rh.min;
    d.rh_max = rh.max;
    d.rh_mean = std::clamp(rh.mean(), rh.min, rh.max);
  }
  if (auto wind = accumulate(samples, SensorKind::wind_speed, start); !wind.empty()) {
    d.wind_mean_2m = wind_at_2m(wind.mean(), site.wind_height_m);
  }
  if (auto solar = accumulate(samples, SensorKind::solar_radiation, start); !solar.empty()) {
    // mean W/m² over the day → MJ/m²/day
    d.solar_mj = solar.mean() * kSecondsPerDay / 1e6;
  }
  if (auto rain = accumulate(samples, SensorKind::rain, start); !rain.empty()) {
    d.rain_mm = rain.sum;
  }
  if (auto p = accumulate(samples, SensorKind::pressure, start); !p.empty()) {
    d.pressure_kpa = p.mean();
  }
  return d;
}

std::optional<double> wet_hours(std::span<const Sample> samples, double threshold) {
  if (samples.empty()) return std::nullopt;
  const bool all_raw = std::all_of(samples.begin(), samples.end(), [](const Sample& s) { return s.is_raw(); });
  if (all_raw) {
    std::vector<TimedValue> series;
    series.reserve(samples.size());
    for (const Sample& s : samples) series.push_back({s.timestamp, s.sum});
    return leaf_wetness_hours(series, threshold);
  }
  double hours = 0.0;
  for (const Sample& s : samples) {
    if (s.mean() >= threshold) hours += static_cast<double>(s.count) * kTickSeconds / kSecondsPerHour;
  }
  return hours;
}

DailyMetrics compute_daily_metrics(const DailySummary& day, const StationSite& site,
                                   const MetricsConfig& config, std::optional<double> leaf_wetness_h) {
  DailyMetrics m;
  m.date = day.date;
  m.t_min = day.t_min;
  m.t_max = day.t_max;
  m.rain_mm = day.rain_mm;
  m.leaf_wetness_h = leaf_wetness_h;
  if (day.t_min && day.t_max) {
    m.gdd = gdd_daily(*day.t_min, *day.t_max, config.gdd_base, config.gdd_upper_cap);
    if (day.rh_mean && *day.rh_mean > 0.0) {
      m.dew_point = dew_point((*day.t_min + *day.t_max) / 2.0, *day.rh_mean);
    }
  }
  try {
    m.et0 = et0_daily(day, site.latitude_deg, day_of_year(day.date), site.elevation_m);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::incomplete_input) throw;
  }
  m.chill = chill_hours(day.hourly_temps);
  m.utah = utah_units(day.hourly_temps, config.chill_table);
  return m;
}

namespace {

std::string cell(const std::optional<double>& v, int precision) {
  if (!v) return kGapMarker;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

}  // namespace

std::string render_metrics_table(std::span<const DailyMetrics> rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %7s %7s %7s %7s %7s %7s %6s %7s %6s\n", "date", "tmin",
                "tmax", "dewpt", "et0", "gdd", "rain", "chill", "utah", "wet_h");
  out += line;
  for (const DailyMetrics& m : rows) {
    const bool chill_gap = m.chill.hours == 0 && m.chill.missing_hours == 24;
    std::snprintf(line, sizeof line, "%-10s %7s %7s %7s %7s %7s %7s %6s %7s %6s\n",
                  to_iso(m.date).c_str(), cell(m.t_min, 1).c_str(), cell(m.t_max, 1).c_str(),
                  cell(m.dew_point, 1).c_str(), cell(m.et0, 2).c_str(), cell(m.gdd, 1).c_str(),
                  cell(m.rain_mm, 1).c_str(),
                  chill_gap ? kGapMarker : std::to_string(m.chill.hours).c_str(),
                  chill_gap ? kGapMarker : cell(m.utah.units, 1).c_str(),
                  cell(m.leaf_wetness_h, 2).c_str());
    out += line;
  }
  return out;
}

}  // namespace vinesense::agromet
