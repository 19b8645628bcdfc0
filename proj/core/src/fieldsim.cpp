#include "vinesense/fieldsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <set>

#include "vinesense/agromet.hpp"
#include "vinesense/error.hpp"
#include "vinesense/wire.hpp"

namespace vinesense::fieldsim {

namespace {

constexpr double kPi = std::numbers::pi;

// SplitMix64 finaliser; used only to derive independent engine seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  return mix(mix(mix(mix(seed) ^ a) ^ b) ^ c);
}

// Portable draws: the standard distributions are implementation-defined.
class Draws {
 public:
  explicit Draws(std::uint64_t k) : engine_(k) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

enum Stream : std::uint64_t { kDayStream = 1, kTickStream = 2, kStationStream = 3 };

}  // namespace

std::vector<SensorKind> standard_sensors() {
  return {SensorKind::temperature,   SensorKind::relative_humidity, SensorKind::pressure,
          SensorKind::solar_radiation, SensorKind::wind_speed,      SensorKind::wind_direction,
          SensorKind::rain,          SensorKind::leaf_wetness,      SensorKind::soil_moisture,
          SensorKind::temperature_elevated};
}

std::string_view to_string(TopologyMode mode) noexcept {
  return mode == TopologyMode::star ? "star" : "mesh";
}

std::optional<TopologyMode> topology_mode_from_string(std::string_view name) noexcept {
  if (name == "star") return TopologyMode::star;
  if (name == "mesh") return TopologyMode::mesh;
  return std::nullopt;
}

Topology build_topology(std::span<const StationSpec> stations, TopologyMode mode,
                        const TopologyOptions& options) {
  std::vector<const StationSpec*> sorted;
  std::set<std::string> ids;
  const StationSpec* gateway = nullptr;
  int gateways = 0;
  for (const auto& s : stations) {
    if (s.station_id.empty() || !ids.insert(s.station_id).second) {
      throw Error(ErrorCode::configuration, "duplicate or empty station id \"" + s.station_id + "\"");
    }
    if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y) || !(s.radio_range_m >= 0.0)) {
      throw Error(ErrorCode::configuration, "station " + s.station_id + ": invalid position or range");
    }
    if (s.is_gateway) {
      ++gateways;
      gateway = &s;
    }
    sorted.push_back(&s);
  }
  if (gateways != 1) {
    throw Error(ErrorCode::configuration,
                "exactly one gateway required, found " + std::to_string(gateways));
  }
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->station_id < b->station_id; });

  Topology topo;
  topo.mode = mode;
  topo.gateway = gateway->station_id;

  std::map<std::string, std::vector<std::string>> neighbors;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      const double d = std::hypot(sorted[i]->position.x - sorted[j]->position.x,
                                  sorted[i]->position.y - sorted[j]->position.y);
      if (d <= std::min(sorted[i]->radio_range_m, sorted[j]->radio_range_m)) {
        topo.edges.emplace_back(sorted[i]->station_id, sorted[j]->station_id);
        neighbors[sorted[i]->station_id].push_back(sorted[j]->station_id);
        neighbors[sorted[j]->station_id].push_back(sorted[i]->station_id);
      }
    }
  }
  for (auto& [id, n] : neighbors) std::sort(n.begin(), n.end());

  topo.routes[topo.gateway] = {};
  if (mode == TopologyMode::star) {
    for (const auto& id : neighbors[topo.gateway]) topo.routes[id] = {topo.gateway};
  } else {
    std::map<std::string, int> dist{{topo.gateway, 0}};
    std::deque<std::string> queue{topo.gateway};
    while (!queue.empty()) {
      const std::string u = queue.front();
      queue.pop_front();
      for (const auto& v : neighbors[u]) {
        if (!dist.contains(v)) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
      }
    }
    for (const auto* s : sorted) {
      const std::string& id = s->station_id;
      if (id == topo.gateway || !dist.contains(id)) continue;
      Route route;
      std::string at = id;
      while (at != topo.gateway) {
        // Lowest-id neighbour one hop closer to the gateway.
        const auto& n = neighbors[at];
        auto next = std::find_if(n.begin(), n.end(), [&](const std::string& c) {
          auto it = dist.find(c);
          return it != dist.end() && it->second == dist[at] - 1;
        });
        at = *next;
        route.push_back(at);
      }
      topo.routes[id] = std::move(route);
    }
  }
  for (const auto* s : sorted) {
    if (!topo.reachable(s->station_id)) topo.unreachable.push_back(s->station_id);
  }

  double area_ha = 0.0;
  if (options.vineyard_area_ha) {
    area_ha = *options.vineyard_area_ha;
  } else if (!sorted.empty()) {
    double x0 = sorted[0]->position.x, x1 = x0, y0 = sorted[0]->position.y, y1 = y0;
    for (const auto* s : sorted) {
      x0 = std::min(x0, s->position.x);
      x1 = std::max(x1, s->position.x);
      y0 = std::min(y0, s->position.y);
      y1 = std::max(y1, s->position.y);
    }
    area_ha = (x1 - x0) * (y1 - y0) / 10000.0;
  }
  const double per_station = area_ha / static_cast<double>(sorted.size());
  if (per_station > options.max_ha_per_station) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "station density: %.1f ha per station exceeds the recommended %.1f ha",
                  per_station, options.max_ha_per_station);
    topo.warnings.emplace_back(buf);
  }
  return topo;
}

ClimateProfile napa_climate() { return ClimateProfile{}; }

ClimateProfile burgundy_climate() {
  ClimateProfile c;
  c.id = "burgundy";
  c.latitude_deg = 47.0;
  c.elevation_m = 250.0;
  c.t_mean = 15.5;
  c.t_seasonal_amp = 9.0;
  c.peak_doy = 200;
  c.diurnal_amp = 6.0;
  c.rh_mean = 72.0;
  c.rain_day_prob = 0.35;
  c.rain_seasonality = 0.1;
  c.rain_event_mean_mm = 8.0;
  c.solar_peak_wm2 = 850.0;
  c.wind_mean = 3.0;
  c.prevailing_dir = 250.0;
  return c;
}

ClimateProfile climate_profile(std::string_view id) {
  if (id == "napa") {
    ClimateProfile c = napa_climate();
    c.id = "napa";
    return c;
  }
  if (id == "burgundy") return burgundy_climate();
  throw Error(ErrorCode::not_found, "unknown climate profile \"" + std::string(id) + "\"");
}

double baseline_temperature(const ClimateProfile& c, int day_of_year, int tick) {
  const double hour = tick / 4.0;
  return c.t_mean + c.t_seasonal_amp * std::cos(2.0 * kPi * (day_of_year - c.peak_doy) / 365.0) +
         c.diurnal_amp * std::sin(2.0 * kPi * (hour - 9.0) / 24.0);
}

std::vector<Reading> synth_weather(const WeatherContext& ctx, const Date& date, int tick,
                                   const StationSpec& station) {
  if (tick < 0 || tick >= kTicksPerDay) {
    throw Error(ErrorCode::validation, "tick must lie in 0..95");
  }
  const ClimateProfile& c = ctx.climate;
  const double ns = ctx.noise_scale;
  const int doy = day_of_year(date);
  const auto day = static_cast<std::uint64_t>(day_number(date));
  const std::uint64_t sid = fnv1a(station.station_id);
  const double hour = tick / 4.0;

  // Vineyard-wide day state, identical for every station.
  Draws day_draws(key(ctx.seed, kDayStream, day));
  const double anomaly = day_draws.normal() * c.day_anomaly_sd * ns;
  const double rain_p = std::clamp(
      c.rain_day_prob * (1.0 + c.rain_seasonality * std::cos(2.0 * kPi * (doy - 15) / 365.0)), 0.0, 1.0);
  const bool rain_day = ns > 0.0 && day_draws.uniform() < rain_p;
  const int rain_start = static_cast<int>(day_draws.uniform() * kTicksPerDay);
  const int rain_len = 4 + static_cast<int>(day_draws.uniform() * 28);
  const double rain_total = -std::log(1.0 - day_draws.uniform()) * c.rain_event_mean_mm;
  const double cloud = rain_day ? 0.35 : 1.0 - 0.15 * day_draws.uniform() * ns;

  Draws station_draws(key(ctx.seed, kStationStream, sid));
  const double station_offset = (station_draws.uniform() - 0.5) * ns;

  Draws tick_draws(key(ctx.seed, kTickStream ^ sid, day, static_cast<std::uint64_t>(tick)));
  const double seasonal = c.t_mean + c.t_seasonal_amp * std::cos(2.0 * kPi * (doy - c.peak_doy) / 365.0);
  const double temp = baseline_temperature(c, doy, tick) + anomaly + station_offset +
                      tick_draws.normal() * c.tick_noise_sd * ns;

  const bool raining = rain_day && tick >= rain_start && tick < rain_start + rain_len;
  const double rain = raining ? rain_total / rain_len : 0.0;
  const double rh = std::clamp(c.rh_mean - 3.0 * (temp - seasonal) + (raining ? 25.0 : 0.0) +
                                   tick_draws.normal() * 3.0 * ns,
                               5.0, 100.0);

  const double decl = 0.409 * std::sin(2.0 * kPi / 365.0 * doy - 1.39);
  const double phi = c.latitude_deg * kPi / 180.0;
  const double ws = std::acos(std::clamp(-std::tan(phi) * std::tan(decl), -1.0, 1.0));
  const double daylength = 24.0 / kPi * ws;
  const double sunrise = 12.0 - daylength / 2.0;
  const double elevation_frac = (hour + 0.125 - sunrise) / daylength;  // mid-interval
  const double seasonal_peak = c.solar_peak_wm2 * (0.55 + 0.45 * std::cos(2.0 * kPi * (doy - 172) / 365.0));
  double solar = 0.0;
  if (elevation_frac > 0.0 && elevation_frac < 1.0) {
    solar = seasonal_peak * cloud * std::sin(kPi * elevation_frac) *
            std::max(0.0, 1.0 + 0.05 * tick_draws.normal() * ns);
  }

  const double wind = std::abs(c.wind_mean * (1.0 + 0.5 * std::sin(2.0 * kPi * (hour - 10.0) / 24.0)) +
                               tick_draws.normal() * 0.8 * ns);
  double dir = std::fmod(c.prevailing_dir + tick_draws.normal() * 30.0 * ns, 360.0);
  if (dir < 0.0) dir += 360.0;
  if (dir >= 360.0) dir = 0.0;

  const double pressure = agromet::pressure_from_elevation(c.elevation_m) + anomaly * 0.2 +
                          tick_draws.normal() * 0.02 * ns;
  const double wetness = (raining || rh >= 92.0) ? 100.0 : 0.0;
  const double soil = std::clamp(
      28.0 + 8.0 * std::cos(2.0 * kPi * (doy - 30) / 365.0) + (rain_day ? 4.0 : 0.0) +
          tick_draws.normal() * 0.3 * ns,
      0.0, 100.0);
  const double night = std::cos(2.0 * kPi * (hour - 3.0) / 24.0);
  const double inversion = night > 0.0 ? 2.5 * night * (wind < 2.0 ? 1.0 : 0.5) : 0.8 * night;
  const double canopy = std::clamp(std::sin(kPi * (doy - 90) / 200.0), 0.0, 1.0);

  const EpochSeconds ts = local_midnight(date, ctx.utc_offset_s) + tick * kTickSeconds;
  std::vector<Reading> out;
  out.reserve(station.sensors.size());
  for (SensorKind kind : station.sensors) {
    double v = 0.0;
    switch (kind) {
      case SensorKind::temperature: v = temp; break;
      case SensorKind::relative_humidity: v = rh; break;
      case SensorKind::pressure: v = pressure; break;
      case SensorKind::solar_radiation: v = solar; break;
      case SensorKind::wind_speed: v = wind; break;
      case SensorKind::wind_direction: v = dir; break;
      case SensorKind::rain: v = rain; break;
      case SensorKind::leaf_wetness: v = wetness; break;
      case SensorKind::soil_moisture: v = soil; break;
      case SensorKind::temperature_elevated: v = temp + inversion; break;
      case SensorKind::nir_reflectance: v = 0.30 + 0.25 * canopy; break;
      case SensorKind::red_reflectance: v = 0.12 - 0.07 * canopy; break;
      case SensorKind::uv_index: v = solar / 90.0; break;
      case SensorKind::irrigation_applied: continue;
    }
    out.push_back(Reading{ts, station.station_id, kind, v, Quality::ok});
  }
  return out;
}

void validate(const LinkModel& link) {
  if (!(link.loss_probability >= 0.0 && link.loss_probability <= 1.0)) {
    throw Error(ErrorCode::configuration, "loss probability must lie in [0, 1]");
  }
  if (link.max_retries < 0) throw Error(ErrorCode::configuration, "max_retries must be >= 0");
}

RunStats summarize(std::span<const FateEntry> fates) {
  RunStats stats;
  std::uint64_t hops = 0;
  std::map<std::string, std::uint64_t> current_gap;
  for (const auto& f : fates) {
    auto& st = stats.per_station[f.origin];
    ++st.emitted;
    ++stats.emitted;
    if (f.delivered) {
      ++st.delivered;
      ++stats.delivered;
      hops += static_cast<std::uint64_t>(f.hops_traversed);
      current_gap[f.origin] = 0;
    } else {
      ++st.lost;
      st.longest_gap = std::max(st.longest_gap, ++current_gap[f.origin]);
    }
  }
  stats.delivery_ratio = stats.emitted ? static_cast<double>(stats.delivered) / stats.emitted : 0.0;
  stats.mean_hops = stats.delivered ? static_cast<double>(hops) / stats.delivered : 0.0;
  return stats;
}

double analytic_delivery_ratio(const Topology& topology, const LinkModel& link,
                               std::span<const StationSpec> stations) {
  if (stations.empty()) return 0.0;
  const double per_hop = 1.0 - std::pow(link.loss_probability, link.max_retries + 1);
  double sum = 0.0;
  for (const auto& s : stations) {
    auto it = topology.routes.find(s.station_id);
    if (it != topology.routes.end()) sum += std::pow(per_hop, static_cast<double>(it->second.size()));
  }
  return sum / static_cast<double>(stations.size());
}

Simulation::Simulation(std::vector<StationSpec> stations, TopologyMode mode, LinkModel link,
                       SimOptions options)
    : stations_(std::move(stations)),
      link_(link),
      options_(std::move(options)),
      link_rng_(link.seed) {
  validate(link_);
  topology_ = build_topology(stations_, mode, options_.topology);
  std::sort(stations_.begin(), stations_.end(),
            [](const auto& a, const auto& b) { return a.station_id < b.station_id; });
  weather_ = WeatherContext{options_.seed, options_.climate, options_.utc_offset_s, options_.noise_scale};
}

EpochSeconds Simulation::now() const {
  return local_midnight(options_.start_date, options_.utc_offset_s) + tick_ * kTickSeconds;
}

bool Simulation::hop_succeeds() {
  const double u = static_cast<double>(link_rng_() >> 11) * 0x1.0p-53;
  return u >= link_.loss_probability;
}

StepResult Simulation::step() {
  StepResult out;
  const Date date = add_days(options_.start_date, tick_ / kTicksPerDay);
  const int tick = static_cast<int>(tick_ % kTicksPerDay);
  const EpochSeconds ts = now();
  for (const auto& station : stations_) {
    Frame frame;
    frame.origin = station.station_id;
    frame.sequence_no = next_seq_[station.station_id]++;
    frame.readings = synth_weather(weather_, date, tick, station);

    FateEntry fate;
    fate.origin = frame.origin;
    fate.sequence_no = frame.sequence_no;
    fate.emitted_at = ts;

    auto route = topology_.routes.find(station.station_id);
    if (route == topology_.routes.end()) {
      fate.unreachable = true;
      fate.failing_hop = 0;
    } else {
      bool ok = true;
      for (std::size_t hop = 0; hop < route->second.size() && ok; ++hop) {
        ok = false;
        for (int attempt = 0; attempt <= link_.max_retries; ++attempt) {
          ++fate.attempts;
          if (hop_succeeds()) {
            ok = true;
            break;
          }
        }
        if (ok) {
          ++fate.hops_traversed;
        } else {
          fate.failing_hop = static_cast<int>(hop);
        }
      }
      fate.delivered = ok;
    }
    frame.hop_count = fate.hops_traversed;
    frame.delivered = fate.delivered;
    if (frame.delivered) {
      frame.gateway_rx_ts = ts;
      out.delivered.push_back(std::move(frame));
    }
    out.fates.push_back(std::move(fate));
  }
  ++tick_;
  return out;
}

RunResult run(std::vector<StationSpec> stations, TopologyMode mode, const LinkModel& link, int days,
              const SimOptions& options) {
  if (days < 0) throw Error(ErrorCode::configuration, "days must be >= 0");
  Simulation sim(std::move(stations), mode, link, options);
  RunResult result;
  result.topology = sim.topology();
  const std::int64_t ticks = static_cast<std::int64_t>(days) * kTicksPerDay;
  for (std::int64_t t = 0; t < ticks; ++t) {
    StepResult s = sim.step();
    std::move(s.delivered.begin(), s.delivered.end(), std::back_inserter(result.frames));
    std::move(s.fates.begin(), s.fates.end(), std::back_inserter(result.fates));
  }
  result.stats = summarize(result.fates);
  return result;
}

std::string encode_frames(std::span<const Frame> frames) {
  std::string out;
  for (const auto& f : frames) out += wire::encode_batch(f.readings);
  return out;
}

}  // namespace vinesense::fieldsim
