#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vinesense/calendar.hpp"
#include "vinesense/phenology.hpp"

namespace vinesense::irrigation {

struct IrrigationEvent {
  Date date{};
  double mm = 0.0;
  bool operator==(const IrrigationEvent&) const = default;
};

struct WaterBalanceState {
  std::string block_id;
  Date date{};
  double deficit_mm = 0.0;
  std::optional<IrrigationEvent> last_irrigation;
  double kc_current = 0.0;

  bool operator==(const WaterBalanceState&) const = default;
};

struct BalanceConfig {
  double interception_mm = 2.0;
  double threshold_mm = 25.0;
  double efficiency = 0.9;
};

/// deficit' = max(0, deficit + et0·kc − max(0, rain − interception) − irrigation).
/// The returned state keeps `state.date`; irrigation > 0 is recorded as the
/// last irrigation on that date. Throws domain on any negative input.
WaterBalanceState update_balance(const WaterBalanceState& state, double et0, double kc,
                                 double rain_mm, double irrigation_mm,
                                 double interception_mm = 2.0);

struct DailyWater {
  Date date{};
  double et0 = 0.0;
  double kc = 0.0;
  double rain_mm = 0.0;
  double irrigation_mm = 0.0;
};

/// Folds update_balance over consecutive days; the result carries the last
/// day's date.
WaterBalanceState run_balance(WaterBalanceState state, std::span<const DailyWater> days,
                              double interception_mm = 2.0);

enum class Action { irrigate, skip, none_needed };
std::string_view to_string(Action a) noexcept;

struct IrrigationRecommendation {
  Action action = Action::none_needed;
  double amount_mm = 0.0;
  std::string reason;
  Date valid_until{};
};

/// none_needed below the threshold; skip when the 48 h rain forecast covers
/// the deficit; otherwise irrigate deficit / efficiency. Throws domain unless
/// efficiency ∈ (0, 1].
IrrigationRecommendation recommend(const WaterBalanceState& state, double forecast_rain_48h,
                                   double threshold_mm = 25.0, double efficiency = 0.9);

class KcTable {
 public:
  KcTable();
  explicit KcTable(std::map<phenology::Stage, double> values);

  double operator()(phenology::Stage stage) const;
  const std::map<phenology::Stage, double>& values() const noexcept { return values_; }

 private:
  std::map<phenology::Stage, double> values_;
};

double kc_for_stage(phenology::Stage stage, const KcTable& table = KcTable{});

/// Deficit trajectory after applying `hypothetical_mm` today and then the
/// given daily demand (et0·kc) and rain. Element 0 is the state right after
/// the application.
std::vector<double> project_deficit(const WaterBalanceState& state, double hypothetical_mm,
                                    std::span<const double> daily_demand_mm,
                                    std::span<const double> daily_rain_mm,
                                    double interception_mm = 2.0);

}  // namespace vinesense::irrigation
