#pragma once

// The back-end service: ingestion, derived metrics, advisories, alerts,
// forecasts, observations and reports behind a transport-agnostic router.
// HTTP is a thin adapter over Service::handle (see http.hpp).

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "vinesense/alerts.hpp"
#include "vinesense/config.hpp"
#include "vinesense/daily.hpp"
#include "vinesense/irrigation.hpp"
#include "vinesense/phenology.hpp"
#include "vinesense/risk.hpp"
#include "vinesense/store.hpp"

namespace vinesense::service {

struct Request {
  std::string method;
  std::string path;  // without the query string
  std::multimap<std::string, std::string> query;
  std::string authorization;  // Authorization header value
  std::string body;

  std::optional<std::string> param(const std::string& name) const;
  std::vector<std::string> params(const std::string& name) const;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Splits "a=1&b=x%20y" into decoded pairs.
std::multimap<std::string, std::string> parse_query(std::string_view query);

struct RouteInfo {
  std::string method;
  std::string pattern;  // "/v1/alerts/{id}/ack"
  config::Role min_role = config::Role::viewer;
  bool mutating = false;
};

/// Every route the router serves.
const std::vector<RouteInfo>& routes();

// ------------------------------------------------------------------ forecasts

enum class Resolution { hour, day };

struct ForecastEntry {
  EpochSeconds time = 0;  // start of the hour or local day
  std::optional<double> tmin;
  std::optional<double> tmax;
  std::optional<double> rain_mm;
  std::optional<double> rain_prob;  // %
  std::optional<double> wind;       // m/s
};

struct ForecastRecord {
  EpochSeconds issued_at = 0;
  std::optional<std::string> station_id;  // empty applies to every station
  Resolution resolution = Resolution::hour;
  std::vector<ForecastEntry> entries;
};

/// Throws validation for an empty horizon, entries not strictly increasing
/// in time, or values outside their physical range.
void validate(const ForecastRecord& record);
/// Parses the POST /v1/forecast body; throws validation.
ForecastRecord parse_forecast(std::string_view json_text);

// ------------------------------------------------------------------ ingest

struct IngestLine {
  std::size_t line = 0;  // 1-based
  std::string status;    // accepted | duplicate | rejected
  std::string reason;
  std::string detail;
};

struct IngestResult {
  std::size_t accepted = 0;  // stored + duplicates
  std::size_t stored = 0;
  std::size_t duplicates = 0;
  std::size_t rejected = 0;
  std::vector<IngestLine> lines;
};

class Service {
 public:
  explicit Service(config::Config config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response handle(const Request& request);

  /// Stores every valid line, refreshes derived daily state of the touched
  /// station-days and evaluates the alert rules of the touched stations.
  IngestResult ingest(std::string_view ndjson);
  void ingest_forecast(ForecastRecord record);

  /// Daily metrics for local days [from, to]; days without data are gaps.
  std::vector<agromet::DailyMetrics> daily_metrics(const std::string& station_id, const Date& from,
                                                   const Date& to) const;

  /// Re-evaluates the station's rules at `now`; returns newly fired alerts.
  std::vector<alerts::Alert> evaluate_alerts(const std::string& station_id, EpochSeconds now);
  std::vector<alerts::Alert> alerts() const;

  /// Archives every series per the configured retention policy.
  std::size_t run_archival(EpochSeconds now);

  const config::Config& config() const noexcept { return config_; }
  store::Store& store() noexcept { return *store_; }
  const store::Store& store() const noexcept { return *store_; }

 private:
  struct DayEntry {
    Date date{};
    bool has_data = false;
    agromet::DailySummary summary;
    agromet::DailyMetrics metrics;
  };
  struct StationState {
    std::map<Date, DayEntry> days;  // complete local days with data
  };

  struct StageView {
    EpochSeconds as_of = 0;
    Date as_of_date{};
    Date season_start{};
    double cumulative_gdd = 0.0;
    std::map<Date, double> cumulative_by_date;  // end-of-day totals
    std::vector<Date> missing_days;
    phenology::StageEstimate estimate;
  };
  struct IrrigationView {
    EpochSeconds as_of = 0;
    irrigation::WaterBalanceState state;
    irrigation::IrrigationRecommendation recommendation;
    const ForecastRecord* forecast = nullptr;
    double forecast_rain = 0.0;
    double projected_demand = 0.0;
    std::vector<Date> projection_dates;
    std::vector<double> projection;
    std::vector<double> baseline;
    std::vector<Date> missing_et0_days;
  };
  struct FrostView {
    EpochSeconds as_of = 0;
    risk::FrostAssessment assessment;
    const ForecastRecord* forecast = nullptr;
    std::vector<std::string> flags;
  };
  struct InsectView {
    std::string species;
    Date biofix{};
    double cumulative_dd = 0.0;
    risk::InsectStage stage;
  };
  struct RiskView {
    EpochSeconds as_of = 0;
    Date day{};
    Date season_start{};
    std::vector<risk::RiskScore> scores;  // powdery, downy, botrytis
    std::vector<InsectView> insects;
    std::optional<risk::SpreadSector> spread;
    std::optional<double> ndvi;
  };

  Response route(const Request& request);
  Response post_observation(const Request& request, const config::UserAccount& user);

  // Callers hold mutex_.
  DayEntry compute_day(const std::string& station_id, const Date& date, EpochSeconds until) const;
  void refresh_day(const std::string& station_id, const Date& date);
  std::vector<DayEntry> days_through(const std::string& station_id, const Date& first,
                                     EpochSeconds as_of) const;
  std::vector<agromet::DailyMetrics> metrics_locked(const std::string& station_id, const Date& from,
                                                    const Date& to) const;
  EpochSeconds default_as_of(const std::string& station_id) const;
  const ForecastRecord* forecast_for(const std::string& station_id, EpochSeconds as_of) const;
  std::optional<Sample> latest(const std::string& station_id, SensorKind kind, EpochSeconds as_of) const;
  const config::StationConfig& station(const std::string& id) const;
  const config::BlockConfig& block(const std::string& id) const;
  const phenology::VarietyProfile& block_profile(const std::string& block_id) const;

  StageView compute_stage(const std::string& block_id, EpochSeconds as_of) const;
  IrrigationView compute_irrigation(const std::string& block_id, EpochSeconds as_of,
                                    double hypothetical_mm) const;
  FrostView compute_frost(const std::string& station_id, EpochSeconds as_of) const;
  RiskView compute_risk(const std::string& station_id, EpochSeconds as_of) const;

  std::optional<double> metric_value(const std::string& metric, EpochSeconds now) const;
  std::vector<double> rule_window_values(const alerts::AlertRule& rule, EpochSeconds now) const;
  std::string rule_station(const std::string& metric) const;
  std::vector<alerts::Alert> evaluate_locked(const std::string& station_id, EpochSeconds now);
  void check_rule(const alerts::AlertRule& rule) const;

  config::Config config_;
  std::unique_ptr<store::Store> store_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, StationState> derived_;
  std::vector<ForecastRecord> forecasts_;  // sorted by issued_at
  std::map<std::string, std::vector<phenology::ObservationRecord>> observations_;
  std::map<std::string, phenology::VarietyProfile> block_profiles_;
  alerts::AlertEngine engine_;

};

}  // namespace vinesense::service
