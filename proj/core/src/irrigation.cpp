#include "vinesense/irrigation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vinesense/error.hpp"

namespace vinesense::irrigation {

WaterBalanceState update_balance(const WaterBalanceState& state, double et0, double kc,
                                 double rain_mm, double irrigation_mm, double interception_mm) {
  if (et0 < 0.0 || kc < 0.0 || rain_mm < 0.0 || irrigation_mm < 0.0 || interception_mm < 0.0 ||
      state.deficit_mm < 0.0) {
    throw Error(ErrorCode::domain, "water balance inputs must be non-negative");
  }
  WaterBalanceState next = state;
  const double effective_rain = std::max(0.0, rain_mm - interception_mm);
  next.deficit_mm = std::max(0.0, state.deficit_mm + et0 * kc - effective_rain - irrigation_mm);
  next.kc_current = kc;
  if (irrigation_mm > 0.0) next.last_irrigation = IrrigationEvent{state.date, irrigation_mm};
  return next;
}

WaterBalanceState run_balance(WaterBalanceState state, std::span<const DailyWater> days,
                              double interception_mm) {
  for (const auto& d : days) {
    state.date = d.date;
    state = update_balance(state, d.et0, d.kc, d.rain_mm, d.irrigation_mm, interception_mm);
  }
  return state;
}

std::string_view to_string(Action a) noexcept {
  switch (a) {
    case Action::irrigate: return "irrigate";
    case Action::skip: return "skip";
    case Action::none_needed: return "none_needed";
  }
  return "unknown";
}

IrrigationRecommendation recommend(const WaterBalanceState& state, double forecast_rain_48h,
                                   double threshold_mm, double efficiency) {
  if (!(efficiency > 0.0) || efficiency > 1.0) {
    throw Error(ErrorCode::domain, "application efficiency must lie in (0, 1]");
  }
  IrrigationRecommendation r;
  r.valid_until = add_days(state.date, 1);
  char buf[160];
  if (state.deficit_mm < threshold_mm) {
    r.action = Action::none_needed;
    std::snprintf(buf, sizeof buf, "deficit %.1f mm below threshold %.1f mm", state.deficit_mm,
                  threshold_mm);
  } else if (forecast_rain_48h >= state.deficit_mm) {
    r.action = Action::skip;
    std::snprintf(buf, sizeof buf,
                  "significant rainfall expected: %.1f mm forecast within 48 h covers deficit %.1f mm",
                  forecast_rain_48h, state.deficit_mm);
  } else {
    r.action = Action::irrigate;
    r.amount_mm = state.deficit_mm / efficiency;
    std::snprintf(buf, sizeof buf, "deficit %.1f mm at efficiency %.2f", state.deficit_mm, efficiency);
  }
  r.reason = buf;
  return r;
}

KcTable::KcTable()
    : values_{{phenology::Stage::dormancy, 0.0},
              {phenology::Stage::bud_break, 0.3},
              {phenology::Stage::flowering, 0.5},
              {phenology::Stage::veraison, 0.7},
              {phenology::Stage::harvest, 0.6}} {}

KcTable::KcTable(std::map<phenology::Stage, double> values) : values_(std::move(values)) {
  for (auto s : phenology::kStages) {
    auto it = values_.find(s);
    if (it == values_.end() || !(it->second >= 0.0) || !std::isfinite(it->second)) {
      throw Error(ErrorCode::configuration,
                  "Kc table needs a non-negative value for " + std::string(phenology::to_string(s)));
    }
  }
}

double KcTable::operator()(phenology::Stage stage) const { return values_.at(stage); }

double kc_for_stage(phenology::Stage stage, const KcTable& table) { return table(stage); }

std::vector<double> project_deficit(const WaterBalanceState& state, double hypothetical_mm,
                                    std::span<const double> daily_demand_mm,
                                    std::span<const double> daily_rain_mm, double interception_mm) {
  if (hypothetical_mm < 0.0) throw Error(ErrorCode::domain, "hypothetical irrigation must be >= 0");
  std::vector<double> out;
  double deficit = std::max(0.0, state.deficit_mm - hypothetical_mm);
  out.push_back(deficit);
  for (std::size_t i = 0; i < daily_demand_mm.size(); ++i) {
    const double rain = i < daily_rain_mm.size() ? daily_rain_mm[i] : 0.0;
    deficit = std::max(0.0, deficit + daily_demand_mm[i] - std::max(0.0, rain - interception_mm));
    out.push_back(deficit);
  }
  return out;
}

}  // namespace vinesense::irrigation
