#pragma once

// Deterministic simulator of vineyard weather stations and the
// intra-vineyard wireless network that carries their frames to the gateway.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vinesense/calendar.hpp"
#include "vinesense/reading.hpp"

namespace vinesense::fieldsim {

struct Position {
  double x = 0.0;  // meters, vineyard-local frame
  double y = 0.0;
};

inline constexpr double kShortRangeRadioM = 1000.0;

struct StationSpec {
  std::string station_id;
  Position position;
  std::vector<SensorKind> sensors;
  bool is_gateway = false;
  double radio_range_m = kShortRangeRadioM;
};

/// The sensor set of a full weather station.
std::vector<SensorKind> standard_sensors();

enum class TopologyMode { star, mesh };
std::string_view to_string(TopologyMode mode) noexcept;
std::optional<TopologyMode> topology_mode_from_string(std::string_view name) noexcept;

/// Hops from a station to the gateway, ending with the gateway id. The
/// gateway's own route is empty.
using Route = std::vector<std::string>;

struct Topology {
  TopologyMode mode = TopologyMode::star;
  std::string gateway;
  std::vector<std::pair<std::string, std::string>> edges;  // first < second
  std::map<std::string, Route> routes;                      // reachable stations only
  std::vector<std::string> unreachable;
  std::vector<std::string> warnings;

  bool reachable(const std::string& station) const { return routes.contains(station); }
};

struct TopologyOptions {
  std::optional<double> vineyard_area_ha;  // defaults to the stations' bounding box
  double max_ha_per_station = 8.0;
};

/// Throws configuration for zero or several gateways, duplicate ids or
/// non-finite positions.
Topology build_topology(std::span<const StationSpec> stations, TopologyMode mode,
                        const TopologyOptions& options = {});

// ------------------------------------------------------------------ weather

struct ClimateProfile {
  std::string id;
  double latitude_deg = 38.5;
  double elevation_m = 60.0;
  double t_mean = 17.0;          // annual mean, °C
  double t_seasonal_amp = 8.0;   // °C
  int peak_doy = 200;
  double diurnal_amp = 8.5;      // half of the daily range, °C
  double day_anomaly_sd = 1.5;   // synoptic day-to-day noise, °C
  double tick_noise_sd = 0.4;    // sensor noise, °C
  double rh_mean = 65.0;
  double rain_day_prob = 0.25;
  double rain_seasonality = 0.9;  // 0 = uniform, 1 = all winter
  double rain_event_mean_mm = 12.0;
  double solar_peak_wm2 = 950.0;
  double wind_mean = 2.5;
  double prevailing_dir = 225.0;
};

ClimateProfile napa_climate();
ClimateProfile burgundy_climate();
/// Throws not_found for an unknown id.
ClimateProfile climate_profile(std::string_view id);

/// Noise-free temperature at a tick: seasonal cosine plus a diurnal sinusoid
/// peaking at 15:00 local.
double baseline_temperature(const ClimateProfile& climate, int day_of_year, int tick);

struct WeatherContext {
  std::uint64_t seed = 0;
  ClimateProfile climate = napa_climate();
  std::int32_t utc_offset_s = 0;
  double noise_scale = 1.0;  // 0 disables every random term
};

/// Readings of one station at one 15-minute tick (0..95) of a local day.
/// Throws validation for a tick outside 0..95.
std::vector<Reading> synth_weather(const WeatherContext& ctx, const Date& date, int tick,
                                   const StationSpec& station);

// ------------------------------------------------------------------ network

struct LinkModel {
  double loss_probability = 0.0;  // per hop attempt
  int max_retries = 0;
  std::uint64_t seed = 1;
};

void validate(const LinkModel& link);

struct Frame {
  std::uint64_t sequence_no = 0;
  std::string origin;
  std::vector<Reading> readings;
  int hop_count = 0;
  bool delivered = false;
  EpochSeconds gateway_rx_ts = 0;
};

struct FateEntry {
  std::string origin;
  std::uint64_t sequence_no = 0;
  EpochSeconds emitted_at = 0;
  bool delivered = false;
  int hops_traversed = 0;
  int attempts = 0;
  std::optional<int> failing_hop;  // index into the route
  bool unreachable = false;
};

struct StationStats {
  std::uint64_t emitted = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
  std::uint64_t longest_gap = 0;  // longest run of consecutive lost frames
};

struct RunStats {
  std::uint64_t emitted = 0;
  std::uint64_t delivered = 0;
  double delivery_ratio = 0.0;
  double mean_hops = 0.0;  // over delivered frames
  std::map<std::string, StationStats> per_station;
};

/// Statistics recomputed from a fate log.
RunStats summarize(std::span<const FateEntry> fates);

/// Expected delivery ratio: each station contributes (1 − p^(r+1))^hops,
/// unreachable stations contribute 0.
double analytic_delivery_ratio(const Topology& topology, const LinkModel& link,
                               std::span<const StationSpec> stations);

struct SimOptions {
  std::uint64_t seed = 1;
  Date start_date = make_date(2025, 3, 1);
  ClimateProfile climate = napa_climate();
  std::int32_t utc_offset_s = 0;
  double noise_scale = 1.0;
  TopologyOptions topology{};
};

struct StepResult {
  std::vector<Frame> delivered;
  std::vector<FateEntry> fates;
};

/// Single-threaded tick loop. Each call to step() advances 15 minutes: every
/// station emits one frame, which is forwarded hop by hop with i.i.d. loss.
class Simulation {
 public:
  Simulation(std::vector<StationSpec> stations, TopologyMode mode, LinkModel link, SimOptions options);

  const Topology& topology() const noexcept { return topology_; }
  const std::vector<StationSpec>& stations() const noexcept { return stations_; }
  std::int64_t tick_index() const noexcept { return tick_; }
  EpochSeconds now() const;

  StepResult step();

 private:
  bool hop_succeeds();

  std::vector<StationSpec> stations_;  // sorted by id
  Topology topology_;
  LinkModel link_;
  SimOptions options_;
  WeatherContext weather_;
  std::mt19937_64 link_rng_;
  std::map<std::string, std::uint64_t> next_seq_;
  std::int64_t tick_ = 0;
};

struct RunResult {
  Topology topology;
  std::vector<Frame> frames;  // delivered, in gateway receive order
  std::vector<FateEntry> fates;
  RunStats stats;
};

RunResult run(std::vector<StationSpec> stations, TopologyMode mode, const LinkModel& link, int days,
              const SimOptions& options);

/// Delivered frames in wire format, one reading per line.
std::string encode_frames(std::span<const Frame> frames);

}  // namespace vinesense::fieldsim
