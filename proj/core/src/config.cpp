#include "vinesense/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "vinesense/error.hpp"

namespace vinesense::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::configuration, path + ": " + message);
}

void only_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) fail(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (auto k : keys) known = known || it.key() == k;
    if (!known) fail(path, "unknown key \"" + it.key() + "\"");
  }
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

void read(const json& j, std::string_view key, const std::string& path, double& out) {
  if (j.contains(key)) out = number(j.at(key), path + "." + std::string(key));
}

void read(const json& j, std::string_view key, const std::string& path, int& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(path + "." + std::string(key), "expected an integer");
  out = v.get<int>();
}

void read(const json& j, std::string_view key, const std::string& path, bool& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_boolean()) fail(path + "." + std::string(key), "expected true or false");
  out = v.get<bool>();
}

void read(const json& j, std::string_view key, const std::string& path, std::string& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_string()) fail(path + "." + std::string(key), "expected a string");
  out = v.get<std::string>();
}

void read(const json& j, std::string_view key, const std::string& path, std::optional<double>& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (v.is_null()) {
    out.reset();
  } else {
    out = number(v, path + "." + std::string(key));
  }
}

std::string required_string(const json& j, std::string_view key, const std::string& path) {
  if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
    fail(path + "." + std::string(key), "required non-empty string");
  }
  return j.at(key).get<std::string>();
}

template <class F>
void each(const json& j, std::string_view key, const std::string& path, F&& f) {
  if (!j.contains(key)) return;
  const json& arr = j.at(key);
  const std::string p = path + "." + std::string(key);
  if (!arr.is_array()) fail(p, "expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) f(arr[i], p + "[" + std::to_string(i) + "]");
}

phenology::Stage parse_stage(const std::string& name, const std::string& path) {
  auto s = phenology::stage_from_string(name);
  if (!s) fail(path, "unknown stage \"" + name + "\"");
  return *s;
}

irrigation::KcTable parse_kc(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  std::map<phenology::Stage, double> values = irrigation::KcTable{}.values();
  for (auto it = j.begin(); it != j.end(); ++it) {
    values[parse_stage(it.key(), path)] = number(it.value(), path + "." + it.key());
  }
  return irrigation::KcTable(std::move(values));
}

void parse_balance(const json& j, const std::string& path, irrigation::BalanceConfig& b) {
  only_keys(j, path, {"interception_mm", "threshold_mm", "efficiency"});
  read(j, "interception_mm", path, b.interception_mm);
  read(j, "threshold_mm", path, b.threshold_mm);
  read(j, "efficiency", path, b.efficiency);
  if (b.interception_mm < 0.0 || b.threshold_mm < 0.0) fail(path, "amounts must be non-negative");
  if (!(b.efficiency > 0.0 && b.efficiency <= 1.0)) fail(path + ".efficiency", "must lie in (0, 1]");
}

phenology::VarietyProfile parse_profile(const json& j, const std::string& path) {
  only_keys(j, path, {"variety", "region", "base_temp", "upper_cap", "stages", "gdd_daily_norms"});
  phenology::VarietyProfile p;
  p.variety_name = required_string(j, "variety", path);
  p.region = required_string(j, "region", path);
  read(j, "base_temp", path, p.base_temp);
  read(j, "upper_cap", path, p.upper_cap);
  if (!j.contains("stages") || !j.at("stages").is_array()) fail(path + ".stages", "required array");
  each(j, "stages", path, [&](const json& s, const std::string& sp) {
    only_keys(s, sp, {"stage", "gdd_low", "gdd_high", "typical_months"});
    phenology::StageRange r;
    r.stage = parse_stage(required_string(s, "stage", sp), sp + ".stage");
    if (!s.contains("gdd_low") || !s.contains("gdd_high")) fail(sp, "gdd_low and gdd_high required");
    read(s, "gdd_low", sp, r.gdd_low);
    read(s, "gdd_high", sp, r.gdd_high);
    read(s, "typical_months", sp, r.typical_months);
    p.stages.push_back(r);
  });
  if (j.contains("gdd_daily_norms")) {
    const json& n = j.at("gdd_daily_norms");
    if (!n.is_array() || (n.size() != 365 && n.size() != 366)) {
      fail(path + ".gdd_daily_norms", "expected 365 or 366 numbers");
    }
    for (std::size_t i = 0; i < n.size(); ++i) {
      p.gdd_daily_norms[i] = number(n[i], path + ".gdd_daily_norms");
    }
    if (n.size() == 365) p.gdd_daily_norms[365] = p.gdd_daily_norms[364];
  } else {
    p.gdd_daily_norms = phenology::synthetic_norms();
  }
  try {
    phenology::validate(p);
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return p;
}

void parse_models(const json& j, const std::string& path, ModelConstants& m) {
  only_keys(j, path,
            {"gdd_base", "gdd_upper_cap", "leaf_wetness_threshold", "chill_table", "powdery_mildew",
             "downy_mildew", "botrytis", "risk_bands", "frost", "spray", "wind_spread", "insects",
             "irrigation", "kc", "recalibration_weight", "forecast_rain_window_h", "frost_horizon_h",
             "wind_window_h", "projection_days"});
  read(j, "gdd_base", path, m.metrics.gdd_base);
  read(j, "gdd_upper_cap", path, m.metrics.gdd_upper_cap);
  read(j, "leaf_wetness_threshold", path, m.metrics.leaf_wetness_threshold);
  if (j.contains("chill_table")) {
    std::vector<agromet::ChillBand> bands;
    each(j, "chill_table", path, [&](const json& b, const std::string& bp) {
      only_keys(b, bp, {"low", "high", "weight"});
      agromet::ChillBand band;
      read(b, "low", bp, band.low);
      read(b, "high", bp, band.high);
      read(b, "weight", bp, band.weight);
      bands.push_back(band);
    });
    try {
      m.metrics.chill_table = agromet::ChillBandTable(std::move(bands));
    } catch (const Error& e) {
      fail(path + ".chill_table", e.what());
    }
  }
  if (j.contains("powdery_mildew")) {
    const std::string p = path + ".powdery_mildew";
    const json& o = j.at("powdery_mildew");
    only_keys(o, p, {"favorable_low", "favorable_high", "min_favorable_hours", "onset_days",
                     "increment", "decrement"});
    auto& c = m.powdery_mildew;
    read(o, "favorable_low", p, c.favorable_low);
    read(o, "favorable_high", p, c.favorable_high);
    read(o, "min_favorable_hours", p, c.min_favorable_hours);
    read(o, "onset_days", p, c.onset_days);
    read(o, "increment", p, c.increment);
    read(o, "decrement", p, c.decrement);
    if (c.favorable_low > c.favorable_high || c.onset_days < 1 || c.min_favorable_hours < 0 ||
        c.increment < 0.0 || c.decrement < 0.0) {
      fail(p, "inconsistent constants");
    }
  }
  if (j.contains("risk_bands")) {
    const std::string p = path + ".risk_bands";
    const json& o = j.at("risk_bands");
    only_keys(o, p, {"moderate_from", "high_above"});
    read(o, "moderate_from", p, m.powdery_mildew.bands.moderate_from);
    read(o, "high_above", p, m.powdery_mildew.bands.high_above);
    if (m.powdery_mildew.bands.moderate_from > m.powdery_mildew.bands.high_above) {
      fail(p, "moderate_from must not exceed high_above");
    }
  }
  if (j.contains("downy_mildew")) {
    const std::string p = path + ".downy_mildew";
    const json& o = j.at("downy_mildew");
    only_keys(o, p, {"min_t_mean", "min_rain_mm", "min_wet_hours"});
    read(o, "min_t_mean", p, m.downy_mildew.min_t_mean);
    read(o, "min_rain_mm", p, m.downy_mildew.min_rain_mm);
    read(o, "min_wet_hours", p, m.downy_mildew.min_wet_hours);
  }
  if (j.contains("botrytis")) {
    const std::string p = path + ".botrytis";
    const json& o = j.at("botrytis");
    only_keys(o, p, {"min_wet_hours", "t_low", "t_high"});
    read(o, "min_wet_hours", p, m.botrytis.min_wet_hours);
    read(o, "t_low", p, m.botrytis.t_low);
    read(o, "t_high", p, m.botrytis.t_high);
  }
  if (j.contains("frost")) {
    const std::string p = path + ".frost";
    const json& o = j.at("frost");
    only_keys(o, p, {"watch_at_or_below", "warning_at_or_below", "severe_at_or_below",
                     "wind_machine_min_inversion", "sprinkler_floor"});
    auto& f = m.frost;
    read(o, "watch_at_or_below", p, f.watch_at_or_below);
    read(o, "warning_at_or_below", p, f.warning_at_or_below);
    read(o, "severe_at_or_below", p, f.severe_at_or_below);
    read(o, "wind_machine_min_inversion", p, f.wind_machine_min_inversion);
    read(o, "sprinkler_floor", p, f.sprinkler_floor);
    if (!(f.severe_at_or_below <= f.warning_at_or_below && f.warning_at_or_below <= f.watch_at_or_below)) {
      fail(p, "thresholds must satisfy severe <= warning <= watch");
    }
  }
  if (j.contains("spray")) {
    const std::string p = path + ".spray";
    const json& o = j.at("spray");
    only_keys(o, p, {"max_wind", "max_rain_prob", "min_window_h"});
    read(o, "max_wind", p, m.spray.max_wind);
    read(o, "max_rain_prob", p, m.spray.max_rain_prob);
    read(o, "min_window_h", p, m.spray.min_window_h);
  }
  if (j.contains("wind_spread")) {
    const std::string p = path + ".wind_spread";
    const json& o = j.at("wind_spread");
    only_keys(o, p, {"calm_below", "medium_from", "long_from", "min_width", "max_width"});
    auto& w = m.wind_spread;
    read(o, "calm_below", p, w.calm_below);
    read(o, "medium_from", p, w.medium_from);
    read(o, "long_from", p, w.long_from);
    read(o, "min_width", p, w.min_width);
    read(o, "max_width", p, w.max_width);
    if (w.min_width > w.max_width || w.medium_from > w.long_from) fail(p, "inconsistent constants");
  }
  if (j.contains("insects")) {
    m.insects.clear();
    each(j, "insects", path, [&](const json& o, const std::string& p) {
      only_keys(o, p, {"species", "base_temp", "stages", "biofix_rule"});
      risk::InsectModel model;
      model.species = required_string(o, "species", p);
      read(o, "base_temp", p, model.base_temp);
      model.biofix_rule = "calendar:03-01";
      read(o, "biofix_rule", p, model.biofix_rule);
      each(o, "stages", p, [&](const json& s, const std::string& sp) {
        only_keys(s, sp, {"dd", "name"});
        double dd = 0.0;
        read(s, "dd", sp, dd);
        model.stage_thresholds.emplace_back(dd, required_string(s, "name", sp));
      });
      try {
        risk::validate(model);
      } catch (const Error& e) {
        fail(p, e.what());
      }
      m.insects.push_back(std::move(model));
    });
  }
  if (j.contains("irrigation")) parse_balance(j.at("irrigation"), path + ".irrigation", m.irrigation);
  if (j.contains("kc")) m.kc = parse_kc(j.at("kc"), path + ".kc");
  read(j, "recalibration_weight", path, m.recalibration_weight);
  read(j, "forecast_rain_window_h", path, m.forecast_rain_window_h);
  read(j, "frost_horizon_h", path, m.frost_horizon_h);
  read(j, "wind_window_h", path, m.wind_window_h);
  read(j, "projection_days", path, m.projection_days);
  if (!(m.recalibration_weight > 0.0 && m.recalibration_weight <= 1.0)) {
    fail(path + ".recalibration_weight", "must lie in (0, 1]");
  }
  if (m.forecast_rain_window_h <= 0.0 || m.frost_horizon_h <= 0.0 || m.wind_window_h <= 0.0 ||
      m.projection_days < 0) {
    fail(path, "windows must be positive");
  }
}

alerts::AlertRule parse_rule(const json& o, const std::string& p) {
  only_keys(o, p, {"rule_id", "metric", "comparator", "threshold", "window_s", "severity", "enabled"});
  alerts::AlertRule r;
  r.rule_id = required_string(o, "rule_id", p);
  r.metric = required_string(o, "metric", p);
  const std::string cmp = required_string(o, "comparator", p);
  auto c = alerts::comparator_from_string(cmp);
  if (!c) fail(p + ".comparator", "unknown comparator \"" + cmp + "\"");
  r.comparator = *c;
  if (!o.contains("threshold")) fail(p + ".threshold", "required");
  read(o, "threshold", p, r.threshold);
  if (o.contains("window_s")) {
    if (!o.at("window_s").is_number_integer()) fail(p + ".window_s", "expected an integer");
    r.window_s = o.at("window_s").get<EpochSeconds>();
  }
  if (o.contains("severity")) {
    auto s = alerts::severity_from_string(required_string(o, "severity", p));
    if (!s) fail(p + ".severity", "expected info, warning or critical");
    r.severity = *s;
  }
  read(o, "enabled", p, r.enabled);
  try {
    alerts::validate(r);
  } catch (const Error& e) {
    fail(p, e.what());
  }
  return r;
}

}  // namespace

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::viewer: return "viewer";
    case Role::operator_: return "operator";
    case Role::admin: return "admin";
  }
  return "unknown";
}

std::optional<Role> role_from_string(std::string_view text) noexcept {
  if (text == "viewer") return Role::viewer;
  if (text == "operator") return Role::operator_;
  if (text == "admin") return Role::admin;
  return std::nullopt;
}

Date season_start_for(const BlockConfig& block, const Date& date) {
  const int year = static_cast<int>(date.year());
  auto start = [&](int y) {
    unsigned day = block.season_start_day;
    // Feb 29 season starts fall back to Feb 28 in common years.
    if (!std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{block.season_start_month},
                                     std::chrono::day{day}}
             .ok()) {
      day = 28;
    }
    return make_date(y, block.season_start_month, day);
  };
  const Date this_year = start(year);
  return this_year <= date ? this_year : start(year - 1);
}

Config default_config() {
  Config c;
  for (auto& p : phenology::builtin_profiles()) c.profiles.emplace(phenology::profile_id(p), p);
  return c;
}

Config parse_config(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::configuration, "configuration is not valid JSON");
  only_keys(j, "config",
            {"version", "data_dir", "sync_writes", "auto_register", "stations", "blocks", "profiles",
             "models", "users", "retention", "alert_rules"});
  if (!j.contains("version") || !j.at("version").is_number_integer() ||
      j.at("version").get<int>() != kConfigVersion) {
    fail("config.version", "must be " + std::to_string(kConfigVersion));
  }
  Config c = default_config();
  if (j.contains("data_dir")) {
    std::string dir;
    read(j, "data_dir", "config", dir);
    if (!dir.empty()) c.data_dir = dir;
  }
  read(j, "sync_writes", "config", c.sync_writes);
  read(j, "auto_register", "config", c.auto_register);

  each(j, "stations", "config", [&](const json& o, const std::string& p) {
    only_keys(o, p, {"id", "latitude", "elevation_m", "utc_offset_minutes", "wind_height_m", "sensors"});
    StationConfig s;
    s.station_id = required_string(o, "id", p);
    read(o, "latitude", p, s.site.latitude_deg);
    read(o, "elevation_m", p, s.site.elevation_m);
    int offset_min = 0;
    read(o, "utc_offset_minutes", p, offset_min);
    if (offset_min < -14 * 60 || offset_min > 14 * 60) fail(p + ".utc_offset_minutes", "out of range");
    s.site.utc_offset_s = offset_min * 60;
    read(o, "wind_height_m", p, s.site.wind_height_m);
    if (s.site.latitude_deg < -90.0 || s.site.latitude_deg > 90.0) fail(p + ".latitude", "out of range");
    if (s.site.wind_height_m <= 0.0) fail(p + ".wind_height_m", "must be positive");
    each(o, "sensors", p, [&](const json& k, const std::string& kp) {
      auto kind = k.is_string() ? sensor_kind_from_string(k.get<std::string>()) : std::nullopt;
      if (!kind) fail(kp, "unknown sensor kind");
      s.sensors.push_back(*kind);
    });
    if (!c.stations.emplace(s.station_id, s).second) fail(p, "duplicate station " + s.station_id);
  });

  each(j, "profiles", "config", [&](const json& o, const std::string& p) {
    auto profile = parse_profile(o, p);
    c.profiles[phenology::profile_id(profile)] = std::move(profile);
  });

  if (j.contains("models")) parse_models(j.at("models"), "config.models", c.models);

  each(j, "blocks", "config", [&](const json& o, const std::string& p) {
    only_keys(o, p, {"id", "station", "profile", "season_start", "irrigation", "kc"});
    BlockConfig b;
    b.block_id = required_string(o, "id", p);
    b.station_id = required_string(o, "station", p);
    read(o, "profile", p, b.profile_id);
    if (!c.stations.contains(b.station_id)) fail(p + ".station", "unknown station " + b.station_id);
    if (!c.profiles.contains(b.profile_id)) fail(p + ".profile", "unknown profile " + b.profile_id);
    if (o.contains("season_start")) {
      std::string md;
      read(o, "season_start", p, md);
      unsigned m = 0, d = 0;
      if (md.size() != 5 || md[2] != '-' || std::sscanf(md.c_str(), "%2u-%2u", &m, &d) != 2 || m < 1 ||
          m > 12 || d < 1 || d > 31) {
        fail(p + ".season_start", "expected MM-DD");
      }
      b.season_start_month = m;
      b.season_start_day = d;
    }
    if (o.contains("irrigation")) {
      irrigation::BalanceConfig bc = c.models.irrigation;
      parse_balance(o.at("irrigation"), p + ".irrigation", bc);
      b.irrigation = bc;
    }
    if (o.contains("kc")) b.kc = parse_kc(o.at("kc"), p + ".kc");
    if (c.stations.contains(b.block_id)) fail(p + ".id", "block id collides with a station id");
    if (!c.blocks.emplace(b.block_id, b).second) fail(p, "duplicate block " + b.block_id);
  });

  each(j, "users", "config", [&](const json& o, const std::string& p) {
    only_keys(o, p, {"user_id", "display_name", "role", "token"});
    UserAccount u;
    u.user_id = required_string(o, "user_id", p);
    u.display_name = u.user_id;
    read(o, "display_name", p, u.display_name);
    auto role = role_from_string(required_string(o, "role", p));
    if (!role) fail(p + ".role", "expected admin, operator or viewer");
    u.role = *role;
    const std::string token = required_string(o, "token", p);
    if (!c.tokens.emplace(token, u).second) fail(p + ".token", "duplicate token");
  });

  if (j.contains("retention")) {
    const json& o = j.at("retention");
    only_keys(o, "config.retention", {"raw_horizon_days", "bucket_width_s"});
    read(o, "raw_horizon_days", "config.retention", c.retention.raw_horizon_days);
    int width = static_cast<int>(c.retention.bucket_width);
    read(o, "bucket_width_s", "config.retention", width);
    c.retention.bucket_width = width;
    c.retention.validate();
  }

  each(j, "alert_rules", "config", [&](const json& o, const std::string& p) {
    c.alert_rules.push_back(parse_rule(o, p));
  });
  return c;
}

alerts::AlertRule parse_alert_rule(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::validation, "alert rule is not valid JSON");
  try {
    return parse_rule(j, "rule");
  } catch (const Error& e) {
    throw Error(ErrorCode::validation, e.what());
  }
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::configuration, "cannot read configuration " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Config load_config_from_env() {
  const char* path = std::getenv(kConfigEnvVar);
  if (!path || !*path) {
    throw Error(ErrorCode::configuration, std::string(kConfigEnvVar) + " is not set");
  }
  return load_config(path);
}

}  // namespace vinesense::config
