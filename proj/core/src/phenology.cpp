#include "vinesense/phenology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "vinesense/error.hpp"

namespace vinesense::phenology {

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::dormancy: return "dormancy";
    case Stage::bud_break: return "bud_break";
    case Stage::flowering: return "flowering";
    case Stage::veraison: return "veraison";
    case Stage::harvest: return "harvest";
  }
  return "unknown";
}

std::optional<Stage> stage_from_string(std::string_view name) noexcept {
  for (Stage s : kStages) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

int bbch_code(Stage stage) noexcept {
  switch (stage) {
    case Stage::dormancy: return 0;
    case Stage::bud_break: return 8;
    case Stage::flowering: return 65;
    case Stage::veraison: return 81;
    case Stage::harvest: return 89;
  }
  return 0;
}

std::string bbch_label(Stage stage) {
  char buf[4];
  std::snprintf(buf, sizeof buf, "%02d", bbch_code(stage));
  return buf;
}

const StageRange* VarietyProfile::range(Stage stage) const noexcept {
  for (const auto& r : stages) {
    if (r.stage == stage) return &r;
  }
  return nullptr;
}

void validate(const VarietyProfile& profile) {
  if (profile.stages.empty()) {
    throw Error(ErrorCode::configuration, profile.variety_name + ": no stage ranges");
  }
  for (std::size_t i = 0; i < profile.stages.size(); ++i) {
    const StageRange& r = profile.stages[i];
    if (r.stage == Stage::dormancy) {
      throw Error(ErrorCode::configuration, profile.variety_name + ": dormancy has no GDD range");
    }
    if (!(r.gdd_low <= r.gdd_high) || r.gdd_low < 0.0) {
      throw Error(ErrorCode::configuration,
                  profile.variety_name + ": invalid range for " + std::string(to_string(r.stage)));
    }
    if (i > 0) {
      const StageRange& p = profile.stages[i - 1];
      if (!(p.stage < r.stage) || !(p.gdd_high < r.gdd_low)) {
        throw Error(ErrorCode::configuration,
                    profile.variety_name + ": stage ranges must be ordered and non-overlapping");
      }
    }
  }
}

DailyNorms synthetic_norms() {
  DailyNorms n{};
  for (int doy = 1; doy <= 366; ++doy) {
    const double v = 6.5 + 8.5 * std::cos(2.0 * std::numbers::pi * (doy - 200) / 365.0);
    n[static_cast<std::size_t>(doy - 1)] = std::max(0.0, v);
  }
  return n;
}

DailyNorms norms_from_history(std::span<const std::map<Date, double>> seasons_daily_gdd) {
  DailyNorms sum{};
  std::array<int, 366> count{};
  for (const auto& season : seasons_daily_gdd) {
    for (const auto& [date, gdd] : season) {
      const auto idx = static_cast<std::size_t>(day_of_year(date) - 1);
      sum[idx] += gdd;
      ++count[idx];
    }
  }
  for (std::size_t i = 0; i < sum.size(); ++i) {
    sum[i] = count[i] > 0 ? sum[i] / count[i] : 0.0;
  }
  // Day 366 only occurs in leap years; borrow day 365 when absent.
  if (count[365] == 0) sum[365] = sum[364];
  return sum;
}

VarietyProfile cabernet_sauvignon_napa() {
  VarietyProfile p;
  p.variety_name = "cabernet_sauvignon";
  p.region = "napa";
  p.base_temp = 10.0;
  p.stages = {
      {Stage::bud_break, 50, 100, "March, April"},
      {Stage::flowering, 350, 400, "May"},
      {Stage::veraison, 1100, 1300, "July"},
      {Stage::harvest, 2200, 2500, "Sep - Oct"},
  };
  p.gdd_daily_norms = synthetic_norms();
  return p;
}

VarietyProfile chardonnay_burgundy() {
  VarietyProfile p;
  p.variety_name = "chardonnay";
  p.region = "burgundy";
  p.base_temp = 10.0;
  p.stages = {
      {Stage::bud_break, 50, 75, "April"},
      {Stage::flowering, 300, 350, "May, June"},
      {Stage::veraison, 900, 1100, "July, Aug"},
      {Stage::harvest, 1800, 2000, "September"},
  };
  p.gdd_daily_norms = synthetic_norms();
  return p;
}

std::vector<VarietyProfile> builtin_profiles() {
  return {cabernet_sauvignon_napa(), chardonnay_burgundy()};
}

std::string profile_id(const VarietyProfile& profile) {
  return profile.variety_name + "/" + profile.region;
}

StageEstimate estimate_stage(double cumulative_gdd, const VarietyProfile& profile) {
  StageEstimate e;
  e.cumulative_gdd = cumulative_gdd;
  const StageRange* current = nullptr;
  const StageRange* next = profile.stages.empty() ? nullptr : &profile.stages.front();
  for (std::size_t i = 0; i < profile.stages.size(); ++i) {
    if (profile.stages[i].gdd_low <= cumulative_gdd) {
      current = &profile.stages[i];
      next = i + 1 < profile.stages.size() ? &profile.stages[i + 1] : nullptr;
    }
  }
  e.current_stage = current ? current->stage : Stage::dormancy;
  if (!next) {
    e.progress_to_next = 1.0;
  } else {
    const double from = current ? current->gdd_low : 0.0;
    const double span = next->gdd_low - from;
    e.progress_to_next = span > 0.0 ? std::clamp((cumulative_gdd - from) / span, 0.0, 1.0) : 0.0;
  }
  return e;
}

std::optional<Date> project_harvest(double cumulative_gdd_to_date, const Date& today,
                                    const VarietyProfile& profile) {
  const StageRange* harvest = profile.range(Stage::harvest);
  if (!harvest) return std::nullopt;
  if (cumulative_gdd_to_date >= harvest->gdd_low) return today;
  double gdd = cumulative_gdd_to_date;
  for (int d = 1; d <= kHarvestHorizonDays; ++d) {
    const Date date = add_days(today, d);
    gdd += profile.gdd_daily_norms[static_cast<std::size_t>(day_of_year(date) - 1)];
    if (gdd >= harvest->gdd_low) return date;
  }
  return std::nullopt;
}

RecalibrationReport recalibrate(const VarietyProfile& profile,
                                std::span<const ObservationRecord> observations,
                                const std::map<Date, double>& cumulative_gdd, double weight) {
  std::vector<ObservationRecord> ordered(observations.begin(), observations.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.date < b.date; });

  Stage latest = Stage::dormancy;
  Date latest_date{};
  for (const auto& obs : ordered) {
    if (obs.observed_stage < latest) {
      throw Error(ErrorCode::conflict,
                  "observation of " + std::string(to_string(obs.observed_stage)) + " on " +
                      to_iso(obs.date) + " regresses from " + std::string(to_string(latest)) +
                      " observed on " + to_iso(latest_date));
    }
    latest = obs.observed_stage;
    latest_date = obs.date;
    if (!cumulative_gdd.contains(obs.date)) {
      throw Error(ErrorCode::validation, "no cumulative GDD for observation date " + to_iso(obs.date));
    }
  }

  RecalibrationReport report{profile, {}};
  VarietyProfile& p = report.profile;
  for (const auto& obs : ordered) {
    const double g = cumulative_gdd.at(obs.date);
    RangeDelta delta;
    delta.stage = obs.observed_stage;
    delta.observed_gdd = g;
    auto it = std::find_if(p.stages.begin(), p.stages.end(),
                           [&](const StageRange& r) { return r.stage == obs.observed_stage; });
    if (it == p.stages.end()) {
      delta.applied = false;
      delta.note = "stage has no GDD range";
      report.deltas.push_back(delta);
      continue;
    }
    delta.old_low = delta.new_low = it->gdd_low;
    delta.old_high = delta.new_high = it->gdd_high;
    if (g >= it->gdd_low && g <= it->gdd_high) {
      delta.note = "consistent with profile";
      report.deltas.push_back(delta);
      continue;
    }
    const double step = weight * (g - it->midpoint());
    const double new_low = it->gdd_low + step;
    const double new_high = it->gdd_high + step;
    const bool below_prev = it != p.stages.begin() && !(std::prev(it)->gdd_high < new_low);
    const bool above_next = std::next(it) != p.stages.end() && !(new_high < std::next(it)->gdd_low);
    if (new_low < 0.0 || below_prev || above_next) {
      delta.applied = false;
      delta.note = "shift rejected: would break stage ordering";
      report.deltas.push_back(delta);
      continue;
    }
    it->gdd_low = new_low;
    it->gdd_high = new_high;
    delta.new_low = new_low;
    delta.new_high = new_high;
    delta.midpoint_delta = step;
    delta.note = "midpoint shifted";
    report.deltas.push_back(delta);
  }
  return report;
}

}  // namespace vinesense::phenology
