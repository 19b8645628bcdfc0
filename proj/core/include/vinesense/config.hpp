#pragma once

// Service configuration: one versioned JSON document holding stations,
// blocks, variety profiles, model constants, users and retention. The file is
// located through the VINESENSE_CONFIG environment variable.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vinesense/alerts.hpp"
#include "vinesense/daily.hpp"
#include "vinesense/irrigation.hpp"
#include "vinesense/phenology.hpp"
#include "vinesense/reading.hpp"
#include "vinesense/risk.hpp"
#include "vinesense/store.hpp"

namespace vinesense::config {

inline constexpr const char* kConfigEnvVar = "VINESENSE_CONFIG";
inline constexpr int kConfigVersion = 1;

enum class Role { viewer, operator_, admin };
std::string_view to_string(Role role) noexcept;
std::optional<Role> role_from_string(std::string_view text) noexcept;

struct UserAccount {
  std::string user_id;
  std::string display_name;
  Role role = Role::viewer;
};

struct StationConfig {
  std::string station_id;
  agromet::StationSite site;
  std::vector<SensorKind> sensors;  // informational; readings of any kind are accepted
};

struct BlockConfig {
  std::string block_id;
  std::string station_id;
  std::string profile_id = "cabernet_sauvignon/napa";
  unsigned season_start_month = 3;
  unsigned season_start_day = 1;
  std::optional<irrigation::BalanceConfig> irrigation;  // falls back to the model default
  std::optional<irrigation::KcTable> kc;
};

/// Most recent occurrence of the block's season-start month/day on or
/// before `date`.
Date season_start_for(const BlockConfig& block, const Date& date);

struct ModelConstants {
  agromet::MetricsConfig metrics;
  risk::PowderyMildewConfig powdery_mildew;
  risk::DownyMildewConfig downy_mildew;
  risk::BotrytisConfig botrytis;
  risk::FrostConfig frost;
  risk::SprayConfig spray;
  risk::WindSpreadConfig wind_spread;
  std::vector<risk::InsectModel> insects{risk::grape_berry_moth()};
  irrigation::BalanceConfig irrigation;
  irrigation::KcTable kc;
  double recalibration_weight = phenology::kRecalibrationWeight;
  double forecast_rain_window_h = 48.0;
  double frost_horizon_h = 24.0;
  double wind_window_h = 24.0;
  int projection_days = 7;
};

struct Config {
  int version = kConfigVersion;
  std::optional<std::filesystem::path> data_dir;  // empty keeps data in memory
  bool sync_writes = false;
  bool auto_register = false;
  std::map<std::string, StationConfig> stations;
  std::map<std::string, BlockConfig> blocks;
  std::map<std::string, phenology::VarietyProfile> profiles;  // keyed by profile_id
  ModelConstants models;
  std::map<std::string, UserAccount> tokens;  // bearer token -> account
  store::RetentionPolicy retention;
  std::vector<alerts::AlertRule> alert_rules;
};

/// Built-in profiles, no stations, users or blocks.
Config default_config();

/// Throws configuration with the offending path on any schema violation,
/// including unknown keys and a version other than 1.
Config parse_config(std::string_view json_text);
Config load_config(const std::filesystem::path& path);
/// Reads the file named by VINESENSE_CONFIG; throws configuration if unset.
Config load_config_from_env();

/// One alert rule in the configuration schema; throws validation.
alerts::AlertRule parse_alert_rule(std::string_view json_text);

}  // namespace vinesense::config
