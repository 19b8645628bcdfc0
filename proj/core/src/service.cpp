#include "vinesense/service.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "vinesense/csv.hpp"
#include "vinesense/error.hpp"
#include "vinesense/irrigation.hpp"
#include "vinesense/risk.hpp"
#include "vinesense/wire.hpp"

namespace vinesense::service {

using json = nlohmann::ordered_json;
using config::Role;

namespace {

constexpr EpochSeconds kMaxTs = std::numeric_limits<EpochSeconds>::max();
constexpr EpochSeconds kPairingTolerance = kTickSeconds;  // temperature/RH pairing for dew point
constexpr EpochSeconds kRecentWindow = 3 * kSecondsPerHour;

int rank(Role r) {
  switch (r) {
    case Role::viewer: return 0;
    case Role::operator_: return 1;
    case Role::admin: return 2;
  }
  return 0;
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::unauthorized: return 401;
    case ErrorCode::forbidden: return 403;
    case ErrorCode::not_found: return 404;
    case ErrorCode::conflict:
    case ErrorCode::out_of_order: return 409;
    case ErrorCode::io: return 500;
    default: return 400;
  }
}

Response json_response(const json& j, int status = 200) {
  return Response{status, "application/json", j.dump()};
}

Response error_response(int status, std::string_view code, const std::string& message) {
  json j;
  j["error"] = code;
  j["message"] = message;
  return json_response(j, status);
}

json opt(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

json iso(EpochSeconds ts) { return to_iso_utc(ts); }

bool is_block_metric_name(std::string_view name) {
  return name == "gdd_cumulative" || name == "water_deficit";
}

bool is_station_metric_name(std::string_view name) {
  return name == "dew_point" || name == "et0" || name == "powdery_mildew" || name == "downy_mildew" ||
         name == "forecast_tmin" || name == "frost_severity";
}

json to_json(const alerts::AlertRule& r) {
  json j;
  j["rule_id"] = r.rule_id;
  j["metric"] = r.metric;
  j["comparator"] = alerts::to_string(r.comparator);
  j["threshold"] = r.threshold;
  j["window_s"] = r.window_s;
  j["severity"] = alerts::to_string(r.severity);
  j["enabled"] = r.enabled;
  return j;
}

json to_json(const alerts::Alert& a, const std::map<std::string, alerts::AlertRule>& rules) {
  json j;
  j["alert_id"] = a.alert_id;
  j["rule_id"] = a.rule_id;
  auto it = rules.find(a.rule_id);
  j["metric"] = it != rules.end() ? json(it->second.metric) : json(nullptr);
  j["severity"] = it != rules.end() ? json(alerts::to_string(it->second.severity)) : json(nullptr);
  j["fired_at"] = iso(a.fired_at);
  j["value_at_fire"] = a.value_at_fire;
  j["state"] = alerts::to_string(a.state);
  j["acknowledged_by"] = a.acknowledged_by ? json(*a.acknowledged_by) : json(nullptr);
  j["resolved_at"] = a.resolved_at ? iso(*a.resolved_at) : json(nullptr);
  return j;
}

json to_json(const risk::RiskScore& r) {
  json j;
  j["kind"] = r.kind;
  j["value"] = r.value;
  j["band"] = risk::to_string(r.band);
  j["as_of"] = to_iso(r.as_of);
  j["station_id"] = r.station_id;
  j["flags"] = r.flags;
  return j;
}

json to_json(const agromet::DailyMetrics& m) {
  json j;
  j["date"] = to_iso(m.date);
  j["t_min"] = opt(m.t_min);
  j["t_max"] = opt(m.t_max);
  j["dew_point"] = opt(m.dew_point);
  j["et0"] = opt(m.et0);
  j["gdd"] = opt(m.gdd);
  j["rain_mm"] = opt(m.rain_mm);
  j["chill_hours"] = m.chill.hours;
  j["chill_missing_hours"] = m.chill.missing_hours;
  j["utah_units"] = m.utah.units;
  j["leaf_wetness_h"] = opt(m.leaf_wetness_h);
  return j;
}

EpochSeconds param_timestamp(const Request& req, const std::string& name, EpochSeconds fallback) {
  auto v = req.param(name);
  if (!v || v->empty()) return fallback;
  return parse_timestamp(*v);
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() + 0 && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    const std::size_t j = path.find('/', i);
    const std::size_t end = j == std::string_view::npos ? path.size() : j;
    out.push_back(path.substr(i, end - i));
    i = end;
  }
  return out;
}

std::optional<std::map<std::string, std::string>> match(std::string_view pattern, std::string_view path) {
  const auto ps = split_path(pattern);
  const auto xs = split_path(path);
  if (ps.size() != xs.size()) return std::nullopt;
  std::map<std::string, std::string> params;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (ps[i].size() > 2 && ps[i].front() == '{' && ps[i].back() == '}') {
      params[std::string(ps[i].substr(1, ps[i].size() - 2))] = percent_decode(xs[i]);
    } else if (ps[i] != xs[i]) {
      return std::nullopt;
    }
  }
  return params;
}

json parse_body(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::validation, "body must be a JSON object");
  return j;
}

std::optional<double> field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) throw Error(ErrorCode::validation, std::string(key) + " must be a number");
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::validation, std::string(key) + " must be finite");
  return v;
}

EpochSeconds time_field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::validation, std::string("missing ") + key);
  const json& v = j.at(key);
  if (v.is_number_integer()) return v.get<EpochSeconds>();
  if (v.is_string()) return parse_timestamp(v.get<std::string>());
  throw Error(ErrorCode::validation, std::string(key) + " must be epoch seconds or ISO-8601");
}

}  // namespace

// ------------------------------------------------------------------ request

std::optional<std::string> Request::param(const std::string& name) const {
  auto it = query.find(name);
  if (it == query.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Request::params(const std::string& name) const {
  std::vector<std::string> out;
  auto [lo, hi] = query.equal_range(name);
  for (auto it = lo; it != hi; ++it) out.push_back(it->second);
  return out;
}

std::multimap<std::string, std::string> parse_query(std::string_view q) {
  std::multimap<std::string, std::string> out;
  while (!q.empty()) {
    const std::size_t amp = q.find('&');
    std::string_view pair = q.substr(0, amp);
    q = amp == std::string_view::npos ? std::string_view{} : q.substr(amp + 1);
    if (pair.empty()) continue;
    const std::size_t eq = pair.find('=');
    if (eq == std::string_view::npos) {
      out.emplace(percent_decode(pair), "");
    } else {
      out.emplace(percent_decode(pair.substr(0, eq)), percent_decode(pair.substr(eq + 1)));
    }
  }
  return out;
}

const std::vector<RouteInfo>& routes() {
  static const std::vector<RouteInfo> table = {
      {"GET", "/v1/stations", Role::viewer, false},
      {"GET", "/v1/blocks", Role::viewer, false},
      {"GET", "/v1/series", Role::viewer, false},
      {"GET", "/v1/metrics/{station}", Role::viewer, false},
      {"GET", "/v1/stage/{block}", Role::viewer, false},
      {"GET", "/v1/risk/{station}", Role::viewer, false},
      {"GET", "/v1/irrigation/{block}", Role::viewer, false},
      {"GET", "/v1/frost/{station}", Role::viewer, false},
      {"GET", "/v1/spray-windows/{station}", Role::viewer, false},
      {"GET", "/v1/alert-rules", Role::viewer, false},
      {"POST", "/v1/alert-rules", Role::admin, true},
      {"GET", "/v1/alerts", Role::viewer, false},
      {"POST", "/v1/alerts/{id}/ack", Role::operator_, true},
      {"POST", "/v1/observations", Role::operator_, true},
      {"POST", "/v1/forecast", Role::operator_, true},
      {"POST", "/v1/ingest", Role::operator_, true},
      {"GET", "/v1/report", Role::viewer, false},
  };
  return table;
}

// ------------------------------------------------------------------ forecasts

void validate(const ForecastRecord& record) {
  if (record.entries.empty()) throw Error(ErrorCode::validation, "forecast horizon is empty");
  for (std::size_t i = 0; i < record.entries.size(); ++i) {
    const auto& e = record.entries[i];
    if (i > 0 && e.time <= record.entries[i - 1].time) {
      throw Error(ErrorCode::validation, "forecast entries must be sorted by time");
    }
    if (e.tmin && e.tmax && *e.tmin > *e.tmax) throw Error(ErrorCode::validation, "tmin above tmax");
    if (e.rain_mm && *e.rain_mm < 0.0) throw Error(ErrorCode::validation, "rain_mm must be >= 0");
    if (e.rain_prob && (*e.rain_prob < 0.0 || *e.rain_prob > 100.0)) {
      throw Error(ErrorCode::validation, "rain_prob must lie in [0, 100]");
    }
    if (e.wind && *e.wind < 0.0) throw Error(ErrorCode::validation, "wind must be >= 0");
  }
}

ForecastRecord parse_forecast(std::string_view text) {
  json j = parse_body(std::string(text));
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    if (k != "issued_at" && k != "station" && k != "resolution" && k != "entries") {
      throw Error(ErrorCode::validation, "unknown forecast field \"" + k + "\"");
    }
  }
  ForecastRecord r;
  r.issued_at = time_field(j, "issued_at");
  if (j.contains("station") && !j.at("station").is_null()) {
    if (!j.at("station").is_string()) throw Error(ErrorCode::validation, "station must be a string");
    r.station_id = j.at("station").get<std::string>();
  }
  if (j.contains("resolution")) {
    const std::string res = j.at("resolution").is_string() ? j.at("resolution").get<std::string>() : "";
    if (res == "hour") {
      r.resolution = Resolution::hour;
    } else if (res == "day") {
      r.resolution = Resolution::day;
    } else {
      throw Error(ErrorCode::validation, "resolution must be hour or day");
    }
  }
  if (!j.contains("entries") || !j.at("entries").is_array()) {
    throw Error(ErrorCode::validation, "entries must be an array");
  }
  for (const auto& e : j.at("entries")) {
    if (!e.is_object()) throw Error(ErrorCode::validation, "forecast entry must be an object");
    for (auto it = e.begin(); it != e.end(); ++it) {
      const auto& k = it.key();
      if (k != "time" && k != "tmin" && k != "tmax" && k != "rain_mm" && k != "rain_prob" && k != "wind") {
        throw Error(ErrorCode::validation, "unknown forecast entry field \"" + k + "\"");
      }
    }
    ForecastEntry fe;
    fe.time = time_field(e, "time");
    fe.tmin = field(e, "tmin");
    fe.tmax = field(e, "tmax");
    fe.rain_mm = field(e, "rain_mm");
    fe.rain_prob = field(e, "rain_prob");
    fe.wind = field(e, "wind");
    r.entries.push_back(fe);
  }
  validate(r);
  return r;
}

namespace {

EpochSeconds entry_length(Resolution r) {
  return r == Resolution::hour ? kSecondsPerHour : kSecondsPerDay;
}

/// Entries overlapping [from, from + length).
std::vector<const ForecastEntry*> entries_within(const ForecastRecord& f, EpochSeconds from,
                                                 EpochSeconds length) {
  std::vector<const ForecastEntry*> out;
  const EpochSeconds span = entry_length(f.resolution);
  for (const auto& e : f.entries) {
    if (e.time + span > from && e.time < from + length) out.push_back(&e);
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------------ service

Service::Service(config::Config cfg) : config_(std::move(cfg)) {
  store_ = config_.data_dir ? std::make_unique<store::Store>(*config_.data_dir, config_.sync_writes)
                            : std::make_unique<store::Store>();
  for (const auto& [id, b] : config_.blocks) block_profiles_[id] = config_.profiles.at(b.profile_id);
  for (const auto& rule : config_.alert_rules) {
    try {
      check_rule(rule);
    } catch (const Error& e) {
      throw Error(ErrorCode::configuration, "alert rule " + rule.rule_id + ": " + e.what());
    }
    engine_.upsert_rule(rule);
  }
  // Rebuild the derived daily cache from data already on disk.
  std::map<std::string, std::set<Date>> days;
  for (const auto& key : store_->keys()) {
    if (!config_.stations.contains(key.station_id)) {
      if (config_.blocks.contains(key.station_id)) continue;
      if (!config_.auto_register) continue;
      config_.stations[key.station_id] = config::StationConfig{key.station_id, {}, {}};
    }
    const auto offset = config_.stations.at(key.station_id).site.utc_offset_s;
    for (const auto& s : store_->query(key, std::numeric_limits<EpochSeconds>::min(), kMaxTs)) {
      days[key.station_id].insert(local_date(s.timestamp, offset));
    }
  }
  for (const auto& [station_id, dates] : days) {
    for (const auto& d : dates) refresh_day(station_id, d);
  }
}

Service::~Service() = default;

const config::StationConfig& Service::station(const std::string& id) const {
  auto it = config_.stations.find(id);
  if (it == config_.stations.end()) throw Error(ErrorCode::not_found, "unknown station " + id);
  return it->second;
}

const config::BlockConfig& Service::block(const std::string& id) const {
  auto it = config_.blocks.find(id);
  if (it == config_.blocks.end()) throw Error(ErrorCode::not_found, "unknown block " + id);
  return it->second;
}

const phenology::VarietyProfile& Service::block_profile(const std::string& block_id) const {
  auto it = block_profiles_.find(block_id);
  if (it == block_profiles_.end()) throw Error(ErrorCode::not_found, "unknown block " + block_id);
  return it->second;
}

Service::DayEntry Service::compute_day(const std::string& station_id, const Date& date,
                                       EpochSeconds until) const {
  const auto& site = station(station_id).site;
  const EpochSeconds from = local_midnight(date, site.utc_offset_s);
  const EpochSeconds to = std::min(from + kSecondsPerDay, until);
  agromet::StationSamples samples;
  for (const auto& key : store_->keys_for_station(station_id)) {
    auto v = store_->query(key, from, to);
    if (!v.empty()) samples[key.kind] = std::move(v);
  }
  DayEntry e;
  e.date = date;
  e.has_data = !samples.empty();
  e.summary = agromet::summarize_day(date, site, samples);
  std::optional<double> wet;
  if (auto it = samples.find(SensorKind::leaf_wetness); it != samples.end()) {
    wet = agromet::wet_hours(it->second, config_.models.metrics.leaf_wetness_threshold);
  }
  e.metrics = agromet::compute_daily_metrics(e.summary, site, config_.models.metrics, wet);
  return e;
}

void Service::refresh_day(const std::string& station_id, const Date& date) {
  DayEntry e = compute_day(station_id, date, kMaxTs);
  auto& days = derived_[station_id].days;
  if (e.has_data) {
    days[date] = std::move(e);
  } else {
    days.erase(date);
  }
}

std::vector<Service::DayEntry> Service::days_through(const std::string& station_id, const Date& first,
                                                     EpochSeconds as_of) const {
  const auto& site = station(station_id).site;
  const Date last = local_date(as_of, site.utc_offset_s);
  std::vector<DayEntry> out;
  if (last < first) return out;
  const auto cached = derived_.find(station_id);
  for (Date d = first; d <= last; d = add_days(d, 1)) {
    if (d == last) {
      out.push_back(compute_day(station_id, d, as_of + 1));
      continue;
    }
    const DayEntry* hit = nullptr;
    if (cached != derived_.end()) {
      auto it = cached->second.days.find(d);
      if (it != cached->second.days.end()) hit = &it->second;
    }
    if (hit) {
      out.push_back(*hit);
    } else {
      DayEntry empty;
      empty.date = d;
      empty.summary.date = d;
      empty.metrics = agromet::compute_daily_metrics(empty.summary, site, config_.models.metrics);
      out.push_back(std::move(empty));
    }
  }
  return out;
}

EpochSeconds Service::default_as_of(const std::string& station_id) const {
  EpochSeconds as_of = 0;
  for (const auto& key : store_->keys_for_station(station_id)) {
    if (auto last = store_->info(key).last_timestamp) as_of = std::max(as_of, *last);
  }
  for (const auto& f : forecasts_) {
    if (!f.station_id || *f.station_id == station_id) as_of = std::max(as_of, f.issued_at);
  }
  return as_of;
}

const ForecastRecord* Service::forecast_for(const std::string& station_id, EpochSeconds as_of) const {
  for (auto it = forecasts_.rbegin(); it != forecasts_.rend(); ++it) {
    if (it->issued_at <= as_of && (!it->station_id || *it->station_id == station_id)) return &*it;
  }
  return nullptr;
}

std::optional<Sample> Service::latest(const std::string& station_id, SensorKind kind,
                                      EpochSeconds as_of) const {
  store::SeriesKey key{station_id, kind};
  if (!store_->contains(key)) return std::nullopt;
  auto v = store_->query(key, as_of - kRecentWindow, as_of + 1);
  if (v.empty()) return std::nullopt;
  return v.back();
}

namespace {

json series_inputs(const store::Store& st, const std::string& station_id, EpochSeconds from,
                   EpochSeconds as_of) {
  json arr = json::array();
  for (const auto& key : st.keys_for_station(station_id)) {
    auto v = st.query(key, from, as_of + 1);
    if (v.empty()) continue;
    json s;
    s["key"] = store::to_string(key);
    s["from"] = iso(v.front().timestamp);
    s["to"] = iso(v.back().timestamp);
    s["points"] = std::accumulate(v.begin(), v.end(), std::uint64_t{0},
                                  [](std::uint64_t n, const Sample& p) { return n + p.count; });
    arr.push_back(std::move(s));
  }
  return arr;
}

json forecast_input(const ForecastRecord* f) {
  if (!f) return nullptr;
  json j;
  j["issued_at"] = iso(f->issued_at);
  j["station"] = f->station_id ? json(*f->station_id) : json(nullptr);
  return j;
}

}  // namespace

// ------------------------------------------------------------------ advisories

Service::StageView Service::compute_stage(const std::string& block_id, EpochSeconds as_of) const {
  const auto& b = block(block_id);
  const auto& profile = block_profile(block_id);
  const auto& site = station(b.station_id).site;
  StageView v;
  v.as_of = as_of;
  v.as_of_date = local_date(as_of, site.utc_offset_s);
  v.season_start = config::season_start_for(b, v.as_of_date);
  for (const auto& d : days_through(b.station_id, v.season_start, as_of)) {
    if (d.summary.t_min && d.summary.t_max) {
      v.cumulative_gdd +=
          agromet::gdd_daily(*d.summary.t_min, *d.summary.t_max, profile.base_temp, profile.upper_cap);
      v.cumulative_by_date[d.date] = v.cumulative_gdd;
    } else {
      v.missing_days.push_back(d.date);
    }
  }
  v.estimate = phenology::estimate_stage(v.cumulative_gdd, profile);
  return v;
}

Service::IrrigationView Service::compute_irrigation(const std::string& block_id, EpochSeconds as_of,
                                                    double hypothetical_mm) const {
  const auto& b = block(block_id);
  const auto& profile = block_profile(block_id);
  const auto& site = station(b.station_id).site;
  const irrigation::BalanceConfig bc = b.irrigation.value_or(config_.models.irrigation);
  const irrigation::KcTable& kc = b.kc ? *b.kc : config_.models.kc;

  IrrigationView v;
  v.as_of = as_of;
  const Date as_of_date = local_date(as_of, site.utc_offset_s);
  const Date start = config::season_start_for(b, as_of_date);

  std::map<Date, double> applied;
  store::SeriesKey irr_key{block_id, SensorKind::irrigation_applied};
  if (store_->contains(irr_key)) {
    for (const auto& s : store_->query(irr_key, local_midnight(start, site.utc_offset_s), as_of + 1)) {
      applied[local_date(s.timestamp, site.utc_offset_s)] += s.sum;
    }
  }

  irrigation::WaterBalanceState state;
  state.block_id = block_id;
  state.date = start;
  double cumulative = 0.0;
  std::vector<double> recent_demand;
  for (const auto& d : days_through(b.station_id, start, as_of)) {
    const double k = kc(phenology::estimate_stage(cumulative, profile).current_stage);
    if (d.summary.t_min && d.summary.t_max) {
      cumulative += agromet::gdd_daily(*d.summary.t_min, *d.summary.t_max, profile.base_temp,
                                       profile.upper_cap);
    }
    double et0 = 0.0;
    if (d.metrics.et0) {
      et0 = *d.metrics.et0;
      recent_demand.push_back(et0 * k);
    } else if (d.has_data) {
      v.missing_et0_days.push_back(d.date);
    }
    state.date = d.date;
    auto a = applied.find(d.date);
    state = irrigation::update_balance(state, et0, k, d.summary.rain_mm.value_or(0.0),
                                       a == applied.end() ? 0.0 : a->second, bc.interception_mm);
    state.kc_current = k;
  }
  v.state = state;

  const ForecastRecord* f = forecast_for(b.station_id, as_of);
  v.forecast = f;
  if (f) {
    for (const auto* e : entries_within(*f, as_of, static_cast<EpochSeconds>(
                                                        config_.models.forecast_rain_window_h * 3600))) {
      v.forecast_rain += e->rain_mm.value_or(0.0);
    }
  }
  v.recommendation = irrigation::recommend(state, v.forecast_rain, bc.threshold_mm, bc.efficiency);

  const std::size_t n = std::min<std::size_t>(7, recent_demand.size());
  const double demand =
      n == 0 ? 0.0
             : std::accumulate(recent_demand.end() - static_cast<std::ptrdiff_t>(n), recent_demand.end(), 0.0) /
                   static_cast<double>(n);
  std::vector<double> daily_demand(static_cast<std::size_t>(config_.models.projection_days), demand);
  std::vector<double> daily_rain(daily_demand.size(), 0.0);
  if (f) {
    for (std::size_t i = 0; i < daily_rain.size(); ++i) {
      const Date day = add_days(as_of_date, static_cast<std::int64_t>(i) + 1);
      for (const auto* e : entries_within(*f, local_midnight(day, site.utc_offset_s), kSecondsPerDay)) {
        // Each entry counts toward the day holding its start.
        if (local_date(e->time, site.utc_offset_s) == day) daily_rain[i] += e->rain_mm.value_or(0.0);
      }
    }
  }
  for (std::size_t i = 0; i <= daily_demand.size(); ++i) {
    v.projection_dates.push_back(add_days(as_of_date, static_cast<std::int64_t>(i)));
  }
  v.baseline = irrigation::project_deficit(state, 0.0, daily_demand, daily_rain, bc.interception_mm);
  v.projection =
      irrigation::project_deficit(state, hypothetical_mm, daily_demand, daily_rain, bc.interception_mm);
  v.projected_demand = demand;
  return v;
}

Service::FrostView Service::compute_frost(const std::string& station_id, EpochSeconds as_of) const {
  FrostView v;
  v.as_of = as_of;
  const auto& site = station(station_id).site;
  const ForecastRecord* f = forecast_for(station_id, as_of);
  v.forecast = f;
  std::optional<double> tmin;
  if (f) {
    for (const auto* e : entries_within(*f, as_of,
                                        static_cast<EpochSeconds>(config_.models.frost_horizon_h * 3600))) {
      if (e->tmin) tmin = tmin ? std::min(*tmin, *e->tmin) : *e->tmin;
    }
  }
  auto t = latest(station_id, SensorKind::temperature, as_of);
  auto rh = latest(station_id, SensorKind::relative_humidity, as_of);
  std::optional<double> dew;
  if (t && rh && std::abs(t->timestamp - rh->timestamp) <= kPairingTolerance && rh->mean() > 0.0) {
    dew = agromet::dew_point(t->mean(), std::min(rh->mean(), 100.0));
  }
  std::optional<double> wind;
  store::SeriesKey wind_key{station_id, SensorKind::wind_speed};
  if (store_->contains(wind_key)) {
    auto w = store_->query(wind_key, as_of - kRecentWindow + 1, as_of + 1);
    if (!w.empty()) {
      double sum = 0.0;
      std::uint64_t count = 0;
      for (const auto& s : w) {
        sum += s.sum;
        count += s.count;
      }
      wind = sum / static_cast<double>(count);
    }
  }
  std::optional<double> inversion;
  auto elevated = latest(station_id, SensorKind::temperature_elevated, as_of);
  if (elevated && t) {
    try {
      inversion = agromet::inversion_strength({elevated->timestamp, elevated->mean()},
                                              {t->timestamp, t->mean()});
    } catch (const Error&) {
      v.flags.push_back("inversion unavailable: elevated and ground readings not paired");
    }
  }
  if (!tmin) {
    v.flags.push_back("no forecast minimum available");
    v.assessment.date = local_date(as_of, site.utc_offset_s);
    v.assessment.wind_mean = wind;
    v.assessment.inversion_strength = inversion;
    v.assessment.forecast_tmin = std::numeric_limits<double>::quiet_NaN();
    v.assessment.dew_point_spread = std::numeric_limits<double>::quiet_NaN();
    return v;
  }
  if (!dew) v.flags.push_back("dew point unavailable");
  v.assessment = risk::frost_risk(*tmin, dew.value_or(std::numeric_limits<double>::quiet_NaN()), wind,
                                  inversion, config_.models.frost);
  v.assessment.date = local_date(as_of, site.utc_offset_s);
  return v;
}

Service::RiskView Service::compute_risk(const std::string& station_id, EpochSeconds as_of) const {
  RiskView v;
  v.as_of = as_of;
  const auto& site = station(station_id).site;
  const Date today = local_date(as_of, site.utc_offset_s);
  v.day = add_days(today, -1);

  config::BlockConfig season;  // March 1 unless a block on this station says otherwise
  for (const auto& [_, b] : config_.blocks) {
    if (b.station_id == station_id) {
      season = b;
      break;
    }
  }
  v.season_start = config::season_start_for(season, today);
  const auto days = days_through(station_id, v.season_start, as_of);

  std::vector<agromet::HourlyTemps> hourly;
  int skipped = 0;
  const DayEntry* risk_day = nullptr;
  for (const auto& d : days) {
    if (d.date >= today) continue;
    if (d.date == v.day && d.has_data) risk_day = &d;
    if (d.has_data) {
      hourly.push_back(d.summary.hourly_temps);
    } else {
      ++skipped;
    }
  }
  auto pm = risk::powdery_mildew_index(hourly, std::nullopt, config_.models.powdery_mildew);
  if (skipped > 0) pm.flags.push_back(std::to_string(skipped) + " days without data skipped");
  pm.as_of = v.day;

  agromet::DailySummary empty;
  empty.date = v.day;
  const agromet::DailySummary& ds = risk_day ? risk_day->summary : empty;
  const std::optional<double> wet = risk_day ? risk_day->metrics.leaf_wetness_h : std::nullopt;
  auto dm = risk::downy_mildew_risk(ds, wet, config_.models.downy_mildew);
  dm.as_of = v.day;

  risk::RiskScore bot;
  if (wet && ds.t_min && ds.t_max) {
    bot = risk::botrytis_flag(*wet, (*ds.t_min + *ds.t_max) / 2.0, config_.models.botrytis);
  } else {
    bot.kind = "botrytis_flag";
    if (!wet) bot.flags.push_back("degraded: leaf wetness unavailable");
    if (!ds.t_min || !ds.t_max) bot.flags.push_back("degraded: temperature unavailable");
  }
  bot.as_of = v.day;
  for (auto* s : {&pm, &dm, &bot}) s->station_id = station_id;
  v.scores = {pm, dm, bot};

  for (const auto& model : config_.models.insects) {
    Date biofix = risk::default_biofix(static_cast<int>(today.year()));
    if (biofix > today) biofix = risk::default_biofix(static_cast<int>(today.year()) - 1);
    double dd = 0.0;
    for (const auto& d : days_through(station_id, biofix, as_of)) {
      if (d.summary.t_min && d.summary.t_max) {
        dd += agromet::gdd_daily(*d.summary.t_min, *d.summary.t_max, model.base_temp);
      }
    }
    v.insects.push_back({model.species, biofix, dd, risk::insect_stage(dd, model)});
  }

  const EpochSeconds wind_from =
      as_of - static_cast<EpochSeconds>(config_.models.wind_window_h * 3600) + 1;
  store::SeriesKey speed_key{station_id, SensorKind::wind_speed};
  store::SeriesKey dir_key{station_id, SensorKind::wind_direction};
  if (store_->contains(speed_key) && store_->contains(dir_key)) {
    auto speeds = store_->query(speed_key, wind_from, as_of + 1);
    auto dirs = store_->query(dir_key, wind_from, as_of + 1);
    std::vector<risk::WindSample> pairs;
    std::size_t j = 0;
    for (const auto& s : speeds) {
      while (j < dirs.size() && dirs[j].timestamp < s.timestamp) ++j;
      if (j < dirs.size() && dirs[j].timestamp == s.timestamp) pairs.push_back({s.mean(), dirs[j].mean()});
    }
    if (!pairs.empty()) v.spread = risk::wind_spread_sector(pairs, station_id, config_.models.wind_spread);
  }

  auto nir = latest(station_id, SensorKind::nir_reflectance, as_of);
  auto red = latest(station_id, SensorKind::red_reflectance, as_of);
  if (nir && red && std::abs(nir->timestamp - red->timestamp) <= kPairingTolerance) {
    try {
      v.ndvi = agromet::ndvi(nir->mean(), red->mean());
    } catch (const Error&) {
    }
  }
  return v;
}

// ------------------------------------------------------------------ alerts

std::string Service::rule_station(const std::string& metric) const {
  const auto at = metric.find('@');
  std::string id;
  if (at != std::string::npos) {
    id = metric.substr(at + 1);
  } else {
    id = store::parse_series_key(metric).station_id;
  }
  if (auto b = config_.blocks.find(id); b != config_.blocks.end()) return b->second.station_id;
  return id;
}

void Service::check_rule(const alerts::AlertRule& rule) const {
  alerts::validate(rule);
  const auto at = rule.metric.find('@');
  if (at != std::string::npos) {
    const std::string name = rule.metric.substr(0, at);
    const std::string id = rule.metric.substr(at + 1);
    if (is_block_metric_name(name)) {
      if (!config_.blocks.contains(id)) throw Error(ErrorCode::validation, "unknown block " + id);
    } else if (is_station_metric_name(name)) {
      if (!config_.stations.contains(id)) throw Error(ErrorCode::validation, "unknown station " + id);
    } else {
      throw Error(ErrorCode::validation, "unknown derived metric " + name);
    }
    return;
  }
  const auto key = store::parse_series_key(rule.metric);
  if (!config_.stations.contains(key.station_id) && !config_.blocks.contains(key.station_id) &&
      !config_.auto_register) {
    throw Error(ErrorCode::validation, "unknown station " + key.station_id);
  }
}

std::optional<double> Service::metric_value(const std::string& metric, EpochSeconds now) const {
  const auto at = metric.find('@');
  const std::string name = metric.substr(0, at);
  const std::string id = metric.substr(at + 1);
  if (name == "gdd_cumulative") return compute_stage(id, now).cumulative_gdd;
  if (name == "water_deficit") return compute_irrigation(id, now, 0.0).state.deficit_mm;
  if (name == "dew_point") {
    auto t = latest(id, SensorKind::temperature, now);
    auto rh = latest(id, SensorKind::relative_humidity, now);
    if (!t || !rh || std::abs(t->timestamp - rh->timestamp) > kPairingTolerance || rh->mean() <= 0.0) {
      return std::nullopt;
    }
    return agromet::dew_point(t->mean(), std::min(rh->mean(), 100.0));
  }
  if (name == "et0") {
    const auto& site = station(id).site;
    const Date yesterday = add_days(local_date(now, site.utc_offset_s), -1);
    auto st = derived_.find(id);
    if (st == derived_.end()) return std::nullopt;
    auto d = st->second.days.find(yesterday);
    return d == st->second.days.end() ? std::nullopt : d->second.metrics.et0;
  }
  if (name == "powdery_mildew") return compute_risk(id, now).scores[0].value;
  if (name == "downy_mildew") return compute_risk(id, now).scores[1].value;
  if (name == "forecast_tmin" || name == "frost_severity") {
    auto f = compute_frost(id, now);
    if (!std::isfinite(f.assessment.forecast_tmin)) return std::nullopt;
    if (name == "forecast_tmin") return f.assessment.forecast_tmin;
    return static_cast<double>(f.assessment.severity);
  }
  return std::nullopt;
}

std::vector<double> Service::rule_window_values(const alerts::AlertRule& rule, EpochSeconds now) const {
  std::vector<double> out;
  if (rule.metric.find('@') != std::string::npos) {
    if (auto v = metric_value(rule.metric, now)) out.push_back(*v);
    return out;
  }
  const auto key = store::parse_series_key(rule.metric);
  if (!store_->contains(key)) return out;
  for (const auto& s : store_->query(key, now - rule.window_s + 1, now + 1)) out.push_back(s.mean());
  return out;
}

std::vector<alerts::Alert> Service::evaluate_locked(const std::string& station_id, EpochSeconds now) {
  std::vector<alerts::Alert> fired;
  std::vector<std::string> ids;
  for (const auto& [id, rule] : engine_.rules()) {
    if (rule.enabled && rule_station(rule.metric) == station_id) ids.push_back(id);
  }
  for (const auto& id : ids) {
    const auto values = rule_window_values(engine_.rules().at(id), now);
    if (auto a = engine_.evaluate(id, values, now)) fired.push_back(*a);
  }
  return fired;
}

std::vector<alerts::Alert> Service::evaluate_alerts(const std::string& station_id, EpochSeconds now) {
  std::unique_lock lock(mutex_);
  station(station_id);
  return evaluate_locked(station_id, now);
}

std::vector<alerts::Alert> Service::alerts() const {
  std::shared_lock lock(mutex_);
  return engine_.alerts();
}

// ------------------------------------------------------------------ ingest

IngestResult Service::ingest(std::string_view body) {
  std::unique_lock lock(mutex_);
  IngestResult result;
  std::map<std::string, std::set<Date>> touched;
  std::set<std::string> evaluate;
  std::size_t line_no = 0;
  while (!body.empty()) {
    const std::size_t nl = body.find('\n');
    std::string_view line = body.substr(0, nl);
    body = nl == std::string_view::npos ? std::string_view{} : body.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    IngestLine out;
    out.line = line_no;
    auto reject = [&](std::string reason, std::string detail) {
      out.status = "rejected";
      out.reason = std::move(reason);
      out.detail = std::move(detail);
      ++result.rejected;
      result.lines.push_back(out);
    };

    auto decoded = wire::decode_line(line);
    if (!decoded.reading) {
      reject(decoded.reason, decoded.detail);
      continue;
    }
    const Reading& r = *decoded.reading;
    if (auto why = check_reading(r)) {
      reject("invalid_reading", *why);
      continue;
    }
    const bool for_block =
        r.kind == SensorKind::irrigation_applied && config_.blocks.contains(r.station_id);
    if (!for_block && !config_.stations.contains(r.station_id)) {
      if (!config_.auto_register || config_.blocks.contains(r.station_id)) {
        reject("unknown_station", "station \"" + r.station_id + "\" is not configured");
        continue;
      }
      config_.stations[r.station_id] = config::StationConfig{r.station_id, {}, {}};
    }
    try {
      const auto res = store_->append({r.station_id, r.kind}, r.timestamp, r.value);
      if (res == store::AppendResult::stored) {
        out.status = "accepted";
        ++result.stored;
        if (for_block) {
          evaluate.insert(config_.blocks.at(r.station_id).station_id);
        } else {
          touched[r.station_id].insert(
              local_date(r.timestamp, config_.stations.at(r.station_id).site.utc_offset_s));
          evaluate.insert(r.station_id);
        }
      } else {
        out.status = "duplicate";
        ++result.duplicates;
      }
      ++result.accepted;
      result.lines.push_back(out);
    } catch (const OutOfOrderError& e) {
      reject("out_of_order", "last stored timestamp " + std::to_string(e.last_timestamp()));
    } catch (const Error& e) {
      reject(e.code() == ErrorCode::conflict ? "conflict" : "invalid_reading", e.what());
    }
  }
  for (const auto& [station_id, dates] : touched) {
    for (const auto& d : dates) refresh_day(station_id, d);
  }
  for (const auto& station_id : evaluate) evaluate_locked(station_id, default_as_of(station_id));
  return result;
}

void Service::ingest_forecast(ForecastRecord record) {
  validate(record);
  std::unique_lock lock(mutex_);
  if (record.station_id) station(*record.station_id);
  auto same = std::find_if(forecasts_.begin(), forecasts_.end(), [&](const ForecastRecord& f) {
    return f.issued_at == record.issued_at && f.station_id == record.station_id;
  });
  if (same != forecasts_.end()) forecasts_.erase(same);
  auto pos = std::upper_bound(forecasts_.begin(), forecasts_.end(), record.issued_at,
                              [](EpochSeconds t, const ForecastRecord& f) { return t < f.issued_at; });
  const std::optional<std::string> scope = record.station_id;
  forecasts_.insert(pos, std::move(record));
  for (const auto& [id, _] : config_.stations) {
    if (!scope || *scope == id) evaluate_locked(id, default_as_of(id));
  }
}

std::vector<agromet::DailyMetrics> Service::daily_metrics(const std::string& station_id, const Date& from,
                                                          const Date& to) const {
  std::shared_lock lock(mutex_);
  return metrics_locked(station_id, from, to);
}

std::vector<agromet::DailyMetrics> Service::metrics_locked(const std::string& station_id,
                                                           const Date& from, const Date& to) const {
  if (to < from) throw Error(ErrorCode::validation, "metrics range has from > to");
  const auto& site = station(station_id).site;
  std::vector<agromet::DailyMetrics> out;
  auto cached = derived_.find(station_id);
  for (Date d = from; d <= to; d = add_days(d, 1)) {
    const DayEntry* hit = nullptr;
    if (cached != derived_.end()) {
      auto it = cached->second.days.find(d);
      if (it != cached->second.days.end()) hit = &it->second;
    }
    if (hit) {
      out.push_back(hit->metrics);
    } else {
      agromet::DailySummary empty;
      empty.date = d;
      out.push_back(agromet::compute_daily_metrics(empty, site, config_.models.metrics));
    }
  }
  return out;
}

std::size_t Service::run_archival(EpochSeconds now) {
  return store_->downsample_all(config_.retention, now);
}

// ------------------------------------------------------------------ router

Response Service::handle(const Request& req) {
  try {
    return route(req);
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

Response Service::route(const Request& req) {
  const RouteInfo* found = nullptr;
  bool path_known = false;
  std::map<std::string, std::string> params;
  for (const auto& r : routes()) {
    auto m = match(r.pattern, req.path);
    if (!m) continue;
    path_known = true;
    if (r.method == req.method) {
      found = &r;
      params = std::move(*m);
      break;
    }
  }
  if (!found) {
    return path_known ? error_response(405, "method_not_allowed", req.method + " not allowed on " + req.path)
                      : error_response(404, "not_found", "no route for " + req.path);
  }

  const std::string prefix = "Bearer ";
  if (req.authorization.rfind(prefix, 0) != 0) {
    throw Error(ErrorCode::unauthorized, "missing bearer token");
  }
  auto user_it = config_.tokens.find(req.authorization.substr(prefix.size()));
  if (user_it == config_.tokens.end()) throw Error(ErrorCode::unauthorized, "unknown token");
  const config::UserAccount& user = user_it->second;
  if (rank(user.role) < rank(found->min_role)) {
    throw Error(ErrorCode::forbidden, "role " + std::string(config::to_string(user.role)) + " may not " +
                                          found->method + " " + found->pattern);
  }

  const std::string& p = found->pattern;
  if (p == "/v1/ingest") {
    auto r = ingest(req.body);
    json j;
    j["accepted"] = r.accepted;
    j["stored"] = r.stored;
    j["duplicates"] = r.duplicates;
    j["rejected"] = r.rejected;
    json lines = json::array();
    for (const auto& l : r.lines) {
      json o;
      o["line"] = l.line;
      o["status"] = l.status;
      if (!l.reason.empty()) o["reason"] = l.reason;
      if (!l.detail.empty()) o["detail"] = l.detail;
      lines.push_back(std::move(o));
    }
    j["results"] = std::move(lines);
    return json_response(j);
  }
  if (p == "/v1/forecast") {
    auto record = parse_forecast(req.body);
    json j;
    j["accepted"] = true;
    j["issued_at"] = iso(record.issued_at);
    j["station"] = record.station_id ? json(*record.station_id) : json(nullptr);
    j["entries"] = record.entries.size();
    ingest_forecast(std::move(record));
    return json_response(j);
  }
  if (p == "/v1/alert-rules" && req.method == "POST") {
    auto rule = config::parse_alert_rule(req.body);
    std::unique_lock lock(mutex_);
    check_rule(rule);
    const bool replaced = engine_.rules().contains(rule.rule_id);
    engine_.upsert_rule(rule);
    json j;
    j["rule"] = to_json(rule);
    j["replaced"] = replaced;
    return json_response(j, replaced ? 200 : 201);
  }
  if (p == "/v1/alerts/{id}/ack") {
    std::unique_lock lock(mutex_);
    auto a = engine_.acknowledge(params.at("id"), user.user_id);
    return json_response(to_json(a, engine_.rules()));
  }
  if (p == "/v1/observations") return post_observation(req, user);

  std::shared_lock lock(mutex_);
  if (p == "/v1/stations") {
    json arr = json::array();
    for (const auto& [id, s] : config_.stations) {
      json o;
      o["id"] = id;
      o["latitude"] = s.site.latitude_deg;
      o["elevation_m"] = s.site.elevation_m;
      o["utc_offset_minutes"] = s.site.utc_offset_s / 60;
      json kinds = json::array();
      for (const auto& key : store_->keys_for_station(id)) kinds.push_back(to_string(key.kind));
      o["series"] = std::move(kinds);
      arr.push_back(std::move(o));
    }
    json j;
    j["stations"] = std::move(arr);
    return json_response(j);
  }
  if (p == "/v1/blocks") {
    json arr = json::array();
    for (const auto& [id, b] : config_.blocks) {
      json o;
      o["id"] = id;
      o["station"] = b.station_id;
      o["profile"] = b.profile_id;
      arr.push_back(std::move(o));
    }
    json j;
    j["blocks"] = std::move(arr);
    return json_response(j);
  }
  if (p == "/v1/series" || p == "/v1/report") {
    auto names = req.params("key");
    if (names.empty()) throw Error(ErrorCode::validation, "at least one key parameter is required");
    std::vector<store::SeriesKey> keys;
    for (const auto& n : names) keys.push_back(store::parse_series_key(n));
    const EpochSeconds from = param_timestamp(req, "from", std::numeric_limits<EpochSeconds>::min());
    const EpochSeconds to = param_timestamp(req, "to", kMaxTs);
    store::Aggregate agg = store::Aggregate::raw;
    if (auto a = req.param("aggregate")) {
      auto parsed = store::aggregate_from_string(*a);
      if (!parsed) throw Error(ErrorCode::validation, "aggregate must be raw, hourly or daily");
      agg = *parsed;
    }
    if (p == "/v1/report") {
      return Response{200, "text/csv; charset=utf-8", store::export_report(*store_, keys, from, to, agg)};
    }
    json arr = json::array();
    for (const auto& key : keys) {
      json points = json::array();
      const auto station_it = config_.stations.find(key.station_id);
      const std::int32_t offset = station_it == config_.stations.end() ? 0 : station_it->second.site.utc_offset_s;
      for (const auto& s : store_->query(key, from, to, agg, offset)) {
        json pt;
        pt["ts"] = s.timestamp;
        if (s.is_raw() && agg == store::Aggregate::raw) {
          pt["value"] = s.sum;
        } else {
          pt["min"] = s.min;
          pt["max"] = s.max;
          pt["mean"] = s.mean();
          pt["count"] = s.count;
        }
        points.push_back(std::move(pt));
      }
      json o;
      o["key"] = store::to_string(key);
      o["aggregate"] = store::to_string(agg);
      o["points"] = std::move(points);
      arr.push_back(std::move(o));
    }
    json j;
    j["series"] = std::move(arr);
    return json_response(j);
  }
  if (p == "/v1/metrics/{station}") {
    const std::string& id = params.at("station");
    const auto& site = station(id).site;
    const Date last = local_date(default_as_of(id), site.utc_offset_s);
    const Date to = req.param("to") ? parse_date(*req.param("to")) : last;
    const Date from = req.param("from") ? parse_date(*req.param("from")) : add_days(to, -6);
    if (days_between(from, to) > 3660) throw Error(ErrorCode::validation, "metrics range too long");
    auto rows = metrics_locked(id, from, to);
    const std::string format = req.param("format").value_or("json");
    if (format == "table") return Response{200, "text/plain; charset=utf-8", agromet::render_metrics_table(rows)};
    if (format != "json") throw Error(ErrorCode::validation, "format must be json or table");
    json j;
    j["station"] = id;
    j["from"] = to_iso(from);
    j["to"] = to_iso(to);
    json days = json::array();
    for (const auto& m : rows) days.push_back(to_json(m));
    j["days"] = std::move(days);
    return json_response(j);
  }
  if (p == "/v1/stage/{block}") {
    const std::string& id = params.at("block");
    const auto& b = block(id);
    const EpochSeconds as_of = param_timestamp(req, "as_of", default_as_of(b.station_id));
    auto v = compute_stage(id, as_of);
    const auto& profile = block_profile(id);
    json j;
    j["block"] = id;
    j["profile"] = b.profile_id;
    j["as_of"] = iso(as_of);
    j["stage"] = phenology::to_string(v.estimate.current_stage);
    j["bbch"] = phenology::bbch_label(v.estimate.current_stage);
    j["cumulative_gdd"] = v.cumulative_gdd;
    j["progress_to_next"] = v.estimate.progress_to_next;
    auto harvest = phenology::project_harvest(v.cumulative_gdd, v.as_of_date, profile);
    j["estimated_harvest_date"] = harvest ? json(to_iso(*harvest)) : json(nullptr);
    json ranges = json::array();
    for (const auto& r : profile.stages) {
      json o;
      o["stage"] = phenology::to_string(r.stage);
      o["gdd_low"] = r.gdd_low;
      o["gdd_high"] = r.gdd_high;
      ranges.push_back(std::move(o));
    }
    j["ranges"] = std::move(ranges);
    json inputs;
    inputs["season_start"] = to_iso(v.season_start);
    inputs["days"] = v.cumulative_by_date.size() + v.missing_days.size();
    json missing = json::array();
    for (const auto& d : v.missing_days) missing.push_back(to_iso(d));
    inputs["days_without_temperature"] = std::move(missing);
    inputs["series"] = series_inputs(*store_, b.station_id, local_midnight(v.season_start, station(b.station_id).site.utc_offset_s), as_of);
    j["inputs"] = std::move(inputs);
    return json_response(j);
  }
  if (p == "/v1/irrigation/{block}") {
    const std::string& id = params.at("block");
    const auto& b = block(id);
    EpochSeconds as_of = param_timestamp(req, "as_of", default_as_of(b.station_id));
    store::SeriesKey irr_key{id, SensorKind::irrigation_applied};
    if (!req.param("as_of") && store_->contains(irr_key)) {
      as_of = std::max(as_of, store_->info(irr_key).last_timestamp.value_or(0));
    }
    double hypothetical = 0.0;
    if (auto h = req.param("hypothetical_mm")) {
      std::size_t used = 0;
      try {
        hypothetical = std::stod(*h, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != h->size() || !std::isfinite(hypothetical) || hypothetical < 0.0) {
        throw Error(ErrorCode::validation, "hypothetical_mm must be a non-negative number");
      }
    }
    auto v = compute_irrigation(id, as_of, hypothetical);
    json j;
    j["block"] = id;
    j["as_of"] = iso(as_of);
    json st;
    st["date"] = to_iso(v.state.date);
    st["deficit_mm"] = v.state.deficit_mm;
    st["kc_current"] = v.state.kc_current;
    if (v.state.last_irrigation) {
      json li;
      li["date"] = to_iso(v.state.last_irrigation->date);
      li["mm"] = v.state.last_irrigation->mm;
      st["last_irrigation"] = std::move(li);
    } else {
      st["last_irrigation"] = nullptr;
    }
    j["state"] = std::move(st);
    json rec;
    rec["action"] = irrigation::to_string(v.recommendation.action);
    rec["amount_mm"] = v.recommendation.amount_mm;
    rec["reason"] = v.recommendation.reason;
    rec["valid_until"] = to_iso(v.recommendation.valid_until);
    j["recommendation"] = std::move(rec);
    j["forecast_rain_mm"] = v.forecast_rain;
    json proj;
    proj["hypothetical_mm"] = hypothetical;
    proj["daily_demand_mm"] = v.projected_demand;
    json dates = json::array();
    for (const auto& d : v.projection_dates) dates.push_back(to_iso(d));
    proj["dates"] = std::move(dates);
    proj["deficit_mm"] = v.projection;
    proj["baseline_mm"] = v.baseline;
    j["projection"] = std::move(proj);
    json inputs;
    inputs["forecast"] = forecast_input(v.forecast);
    json missing = json::array();
    for (const auto& d : v.missing_et0_days) missing.push_back(to_iso(d));
    inputs["days_without_et0"] = std::move(missing);
    const auto& site = station(b.station_id).site;
    const EpochSeconds season_from =
        local_midnight(config::season_start_for(b, local_date(as_of, site.utc_offset_s)), site.utc_offset_s);
    json series = series_inputs(*store_, b.station_id, season_from, as_of);
    for (auto& s : series_inputs(*store_, id, season_from, as_of)) series.push_back(s);
    inputs["series"] = std::move(series);
    j["inputs"] = std::move(inputs);
    return json_response(j);
  }
  if (p == "/v1/frost/{station}") {
    const std::string& id = params.at("station");
    station(id);
    const EpochSeconds as_of = param_timestamp(req, "as_of", default_as_of(id));
    auto v = compute_frost(id, as_of);
    const auto& a = v.assessment;
    json j;
    j["station"] = id;
    j["as_of"] = iso(as_of);
    j["date"] = to_iso(a.date);
    j["severity"] = risk::to_string(a.severity);
    j["forecast_tmin"] = opt(a.forecast_tmin);
    j["dew_point_spread"] = opt(a.dew_point_spread);
    j["inversion_strength"] = opt(a.inversion_strength);
    j["wind_mean"] = opt(a.wind_mean);
    json advice = json::array();
    for (auto m : a.advice) advice.push_back(risk::to_string(m));
    j["advice"] = std::move(advice);
    j["flags"] = v.flags;
    json inputs;
    inputs["forecast"] = forecast_input(v.forecast);
    inputs["series"] = series_inputs(*store_, id, as_of - kRecentWindow + 1, as_of);
    j["inputs"] = std::move(inputs);
    return json_response(j);
  }
  if (p == "/v1/spray-windows/{station}") {
    const std::string& id = params.at("station");
    station(id);
    const EpochSeconds as_of = param_timestamp(req, "as_of", default_as_of(id));
    const ForecastRecord* f = forecast_for(id, as_of);
    const auto& cfg = config_.models.spray;
    std::vector<risk::HourlyConditions> hours;
    json flags = json::array();
    if (f && f->resolution == Resolution::hour) {
      for (const auto& e : f->entries) {
        if (e.time + kSecondsPerHour <= as_of) continue;
        // Hours lacking wind or rain probability can never qualify.
        hours.push_back({e.time, e.wind.value_or(std::numeric_limits<double>::infinity()),
                         e.rain_prob.value_or(100.0 + cfg.max_rain_prob)});
      }
    } else {
      flags.push_back(f ? "forecast has daily resolution; hourly entries required"
                        : "no forecast available");
    }
    auto windows = risk::spray_windows(hours, cfg.max_wind, cfg.max_rain_prob, cfg.min_window_h);
    json j;
    j["station"] = id;
    j["as_of"] = iso(as_of);
    json arr = json::array();
    for (const auto& w : windows) {
      json o;
      o["start"] = iso(w.start);
      o["end"] = iso(w.end);
      arr.push_back(std::move(o));
    }
    j["windows"] = std::move(arr);
    json limits;
    limits["max_wind"] = cfg.max_wind;
    limits["max_rain_prob"] = cfg.max_rain_prob;
    limits["min_window_h"] = cfg.min_window_h;
    j["limits"] = std::move(limits);
    j["flags"] = std::move(flags);
    json inputs;
    inputs["forecast"] = forecast_input(f);
    j["inputs"] = std::move(inputs);
    return json_response(j);
  }
  if (p == "/v1/risk/{station}") {
    const std::string& id = params.at("station");
    station(id);
    const EpochSeconds as_of = param_timestamp(req, "as_of", default_as_of(id));
    auto v = compute_risk(id, as_of);
    json j;
    j["station"] = id;
    j["as_of"] = iso(as_of);
    j["day"] = to_iso(v.day);
    json scores = json::array();
    for (const auto& s : v.scores) scores.push_back(to_json(s));
    j["scores"] = std::move(scores);
    json insects = json::array();
    for (const auto& ins : v.insects) {
      json o;
      o["species"] = ins.species;
      o["biofix"] = to_iso(ins.biofix);
      o["cumulative_dd"] = ins.cumulative_dd;
      o["stage"] = ins.stage.stage ? json(*ins.stage.stage) : json(nullptr);
      o["distance_to_next"] = opt(ins.stage.distance_to_next);
      insects.push_back(std::move(o));
    }
    j["insects"] = std::move(insects);
    if (v.spread) {
      json s;
      s["origin"] = v.spread->origin;
      s["center_bearing"] = v.spread->center_bearing;
      s["angular_width"] = v.spread->angular_width;
      s["reach"] = risk::to_string(v.spread->reach);
      s["mean_speed"] = v.spread->mean_speed;
      j["spread"] = std::move(s);
    } else {
      j["spread"] = nullptr;
    }
    j["ndvi"] = opt(v.ndvi);
    json inputs;
    inputs["season_start"] = to_iso(v.season_start);
    inputs["series"] =
        series_inputs(*store_, id, local_midnight(v.season_start, station(id).site.utc_offset_s), as_of);
    j["inputs"] = std::move(inputs);
    return json_response(j);
  }
  if (p == "/v1/alert-rules") {
    json arr = json::array();
    for (const auto& [_, r] : engine_.rules()) arr.push_back(to_json(r));
    json j;
    j["rules"] = std::move(arr);
    return json_response(j);
  }
  if (p == "/v1/alerts") {
    std::optional<alerts::AlertState> filter;
    if (auto s = req.param("state")) {
      filter = alerts::alert_state_from_string(*s);
      if (!filter) throw Error(ErrorCode::validation, "state must be active, acknowledged or resolved");
    }
    json arr = json::array();
    for (const auto& a : engine_.alerts()) {
      if (!filter || a.state == *filter) arr.push_back(to_json(a, engine_.rules()));
    }
    json j;
    j["alerts"] = std::move(arr);
    return json_response(j);
  }
  return error_response(404, "not_found", "no route for " + req.path);
}

Response Service::post_observation(const Request& req, const config::UserAccount& user) {
  json body = parse_body(req.body);
  for (auto it = body.begin(); it != body.end(); ++it) {
    const auto& k = it.key();
    if (k != "block" && k != "date" && k != "stage" && k != "note") {
      throw Error(ErrorCode::validation, "unknown observation field \"" + k + "\"");
    }
  }
  auto text = [&](const char* key, bool required) -> std::string {
    if (!body.contains(key)) {
      if (required) throw Error(ErrorCode::validation, std::string("missing ") + key);
      return {};
    }
    if (!body.at(key).is_string()) throw Error(ErrorCode::validation, std::string(key) + " must be a string");
    return body.at(key).get<std::string>();
  };
  phenology::ObservationRecord obs;
  obs.block_id = text("block", true);
  obs.date = parse_date(text("date", true));
  const std::string stage_name = text("stage", true);
  auto stage = phenology::stage_from_string(stage_name);
  if (!stage) throw Error(ErrorCode::validation, "unknown stage \"" + stage_name + "\"");
  obs.observed_stage = *stage;
  obs.note = text("note", false);
  obs.observer = user.user_id;

  std::unique_lock lock(mutex_);
  const auto& b = block(obs.block_id);
  for (const auto& prior : observations_[obs.block_id]) {
    if ((prior.date <= obs.date && prior.observed_stage > obs.observed_stage) ||
        (prior.date >= obs.date && prior.observed_stage < obs.observed_stage)) {
      throw Error(ErrorCode::conflict, "observation contradicts the stage recorded on " + to_iso(prior.date));
    }
  }
  const auto& site = station(b.station_id).site;
  const EpochSeconds end_of_day = local_midnight(add_days(obs.date, 1), site.utc_offset_s) - 1;
  auto view = compute_stage(obs.block_id, end_of_day);
  const std::vector<phenology::ObservationRecord> batch{obs};
  auto report = phenology::recalibrate(block_profile(obs.block_id), batch, view.cumulative_by_date,
                                       config_.models.recalibration_weight);
  block_profiles_[obs.block_id] = report.profile;
  observations_[obs.block_id].push_back(obs);

  json j;
  json o;
  o["block"] = obs.block_id;
  o["date"] = to_iso(obs.date);
  o["stage"] = phenology::to_string(obs.observed_stage);
  o["observer"] = obs.observer;
  o["note"] = obs.note;
  j["observation"] = std::move(o);
  json deltas = json::array();
  for (const auto& d : report.deltas) {
    json dj;
    dj["stage"] = phenology::to_string(d.stage);
    dj["observed_gdd"] = d.observed_gdd;
    dj["old_low"] = d.old_low;
    dj["old_high"] = d.old_high;
    dj["new_low"] = d.new_low;
    dj["new_high"] = d.new_high;
    dj["midpoint_delta"] = d.midpoint_delta;
    dj["applied"] = d.applied;
    dj["note"] = d.note;
    deltas.push_back(std::move(dj));
  }
  json rep;
  rep["profile"] = b.profile_id;
  rep["deltas"] = std::move(deltas);
  j["report"] = std::move(rep);
  return json_response(j, 201);
}

}  // namespace vinesense::service
