#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "support.hpp"
#include "vinesense/config.hpp"
#include "vinesense/error.hpp"

using namespace vinesense;
using namespace vinesense::config;

namespace {

const char* kMinimal = R"({
  "version": 1,
  "stations": [{"id": "north", "latitude": 38.3, "utc_offset_minutes": -420}],
  "blocks": [{"id": "b1", "station": "north", "profile": "chardonnay/burgundy", "season_start": "04-01",
              "kc": {"veraison": 0.75}}],
  "users": [{"user_id": "ada", "role": "admin", "token": "t-ada"}],
  "models": {"frost": {"watch_at_or_below": 3.0}, "projection_days": 5},
  "retention": {"raw_horizon_days": 30},
  "alert_rules": [{"rule_id": "hot", "metric": "north/temperature", "comparator": ">", "threshold": 35}]
})";

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::configuration);
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, Defaults) {
  const auto c = default_config();
  EXPECT_TRUE(c.profiles.contains("cabernet_sauvignon/napa"));
  EXPECT_TRUE(c.profiles.contains("chardonnay/burgundy"));
  EXPECT_EQ(c.models.frost.watch_at_or_below, 2.0);
  EXPECT_EQ(c.models.irrigation.threshold_mm, 25.0);
  EXPECT_EQ(c.models.irrigation.efficiency, 0.9);
  EXPECT_EQ(c.models.spray.max_wind, 4.5);
  EXPECT_EQ(c.retention.raw_horizon_days, 90);
  EXPECT_FALSE(c.data_dir.has_value());
}

TEST(Config, ParsesDocument) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.stations.at("north").site.utc_offset_s, -420 * 60);
  EXPECT_EQ(c.blocks.at("b1").profile_id, "chardonnay/burgundy");
  EXPECT_EQ(c.blocks.at("b1").season_start_month, 4u);
  EXPECT_EQ((*c.blocks.at("b1").kc)(phenology::Stage::veraison), 0.75);
  EXPECT_EQ(c.tokens.at("t-ada").role, Role::admin);
  EXPECT_EQ(c.models.frost.watch_at_or_below, 3.0);
  EXPECT_EQ(c.models.projection_days, 5);
  EXPECT_EQ(c.retention.raw_horizon_days, 30);
  ASSERT_EQ(c.alert_rules.size(), 1u);
  EXPECT_EQ(c.alert_rules[0].comparator, alerts::Comparator::gt);
}

TEST(Config, RejectsWithPath) {
  EXPECT_NE(config_error(R"({"version": 2})").find("config.version"), std::string::npos);
  EXPECT_NE(config_error(R"({"version": 1, "colour": "red"})").find("colour"), std::string::npos);
  EXPECT_NE(config_error(R"({"version": 1, "stations": [{"id": "a", "latitude": 95}]})").find("latitude"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"version": 1, "blocks": [{"id": "b", "station": "ghost"}]})").find("ghost"),
            std::string::npos);
  EXPECT_FALSE(config_error(R"({"version": 1, "retention": {"bucket_width_s": 7000}})").empty());
  EXPECT_FALSE(config_error("{").empty());
}

TEST(Config, SeasonStart) {
  BlockConfig b;
  EXPECT_EQ(season_start_for(b, make_date(2025, 7, 1)), make_date(2025, 3, 1));
  EXPECT_EQ(season_start_for(b, make_date(2025, 2, 1)), make_date(2024, 3, 1));
  EXPECT_EQ(season_start_for(b, make_date(2025, 3, 1)), make_date(2025, 3, 1));
}

TEST(Config, LoadsFromEnvironment) {
  vinesense::testing::TempDir dir;
  const auto path = dir / "vinesense.json";
  std::ofstream(path) << kMinimal;
  ::setenv(kConfigEnvVar, path.c_str(), 1);
  EXPECT_EQ(load_config_from_env().stations.size(), 1u);
  ::unsetenv(kConfigEnvVar);
  EXPECT_THROW(load_config_from_env(), Error);
}

TEST(Config, AlertRuleDocument) {
  const auto r = parse_alert_rule(R"({"rule_id":"f","metric":"forecast_tmin@north","comparator":"<=","threshold":2})");
  EXPECT_EQ(r.comparator, alerts::Comparator::le);
  try {
    parse_alert_rule(R"({"rule_id":"f"})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::validation);
  }
}
