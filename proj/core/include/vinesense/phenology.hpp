#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vinesense/calendar.hpp"

namespace vinesense::phenology {

enum class Stage { dormancy, bud_break, flowering, veraison, harvest };

inline constexpr std::array kStages = {Stage::dormancy, Stage::bud_break, Stage::flowering,
                                       Stage::veraison, Stage::harvest};

std::string_view to_string(Stage stage) noexcept;
std::optional<Stage> stage_from_string(std::string_view name) noexcept;

/// BBCH principal growth-stage code (dormancy 00 … harvest 89).
int bbch_code(Stage stage) noexcept;
std::string bbch_label(Stage stage);  // zero-padded, e.g. "08"

struct StageRange {
  Stage stage = Stage::bud_break;
  double gdd_low = 0.0;
  double gdd_high = 0.0;
  std::string typical_months;  // informational only

  double midpoint() const noexcept { return (gdd_low + gdd_high) / 2.0; }
  bool operator==(const StageRange&) const = default;
};

using DailyNorms = std::array<double, 366>;  // index = day_of_year - 1

struct VarietyProfile {
  std::string variety_name;
  std::string region;
  double base_temp = 10.0;
  std::optional<double> upper_cap;
  std::vector<StageRange> stages;  // bud_break, flowering, veraison, harvest
  DailyNorms gdd_daily_norms{};

  const StageRange* range(Stage stage) const noexcept;
  bool operator==(const VarietyProfile&) const = default;
};

/// Throws configuration when ranges are unordered, overlap, or low > high.
void validate(const VarietyProfile& profile);

/// Seasonal sinusoid used when no history is available.
DailyNorms synthetic_norms();

/// Per-day-of-year mean daily GDD across past seasons.
DailyNorms norms_from_history(std::span<const std::map<Date, double>> seasons_daily_gdd);

VarietyProfile cabernet_sauvignon_napa();
VarietyProfile chardonnay_burgundy();
std::vector<VarietyProfile> builtin_profiles();
std::string profile_id(const VarietyProfile& profile);  // "cabernet_sauvignon/napa"

struct StageEstimate {
  Stage current_stage = Stage::dormancy;
  double progress_to_next = 0.0;
  double cumulative_gdd = 0.0;
  std::optional<Date> estimated_harvest_date;
};

StageEstimate estimate_stage(double cumulative_gdd, const VarietyProfile& profile);

inline constexpr int kHarvestHorizonDays = 400;

/// Earliest date at which GDD extended by the daily norms reaches the harvest
/// lower bound; empty if not reached within 400 days.
std::optional<Date> project_harvest(double cumulative_gdd_to_date, const Date& today,
                                    const VarietyProfile& profile);

struct ObservationRecord {
  Date date{};
  std::string block_id;
  Stage observed_stage = Stage::dormancy;
  std::string observer;
  std::string note;
};

struct RangeDelta {
  Stage stage = Stage::bud_break;
  double observed_gdd = 0.0;
  double old_low = 0.0;
  double old_high = 0.0;
  double new_low = 0.0;
  double new_high = 0.0;
  double midpoint_delta = 0.0;
  bool applied = true;
  std::string note;
};

struct RecalibrationReport {
  VarietyProfile profile;
  std::vector<RangeDelta> deltas;
};

inline constexpr double kRecalibrationWeight = 0.3;

/// Shifts each observed stage's range midpoint toward the observed GDD by an
/// exponentially weighted step, keeping the width. A shift that would break
/// stage ordering is rejected and reported. Throws conflict when observations
/// regress (a later date reports an earlier stage) and validation when an
/// observation date has no cumulative GDD.
RecalibrationReport recalibrate(const VarietyProfile& profile,
                                std::span<const ObservationRecord> observations,
                                const std::map<Date, double>& cumulative_gdd,
                                double weight = kRecalibrationWeight);

}  // namespace vinesense::phenology
