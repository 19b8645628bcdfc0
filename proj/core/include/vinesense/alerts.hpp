#pragma once

// Alert rules and the fired-alert lifecycle. The engine is told which values
// a rule's metric took inside its window; resolving the metric to values is
// the service's job.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vinesense/calendar.hpp"

namespace vinesense::alerts {

enum class Comparator { lt, le, gt, ge, crosses };
std::string_view to_string(Comparator c) noexcept;
/// Accepts <, <=, ≤, >, >=, ≥, crosses and the lt/le/gt/ge spellings.
std::optional<Comparator> comparator_from_string(std::string_view text) noexcept;

enum class Severity { info, warning, critical };
std::string_view to_string(Severity s) noexcept;
std::optional<Severity> severity_from_string(std::string_view text) noexcept;

enum class AlertState { active, acknowledged, resolved };
std::string_view to_string(AlertState s) noexcept;
std::optional<AlertState> alert_state_from_string(std::string_view text) noexcept;

struct AlertRule {
  std::string rule_id;
  std::string metric;  // "station/sensor" or "<derived>@<station|block>"
  Comparator comparator = Comparator::gt;
  double threshold = 0.0;
  EpochSeconds window_s = kSecondsPerHour;
  Severity severity = Severity::warning;
  bool enabled = true;

  bool operator==(const AlertRule&) const = default;
};

/// Throws validation for an empty id or metric, a non-positive window or a
/// non-finite threshold.
void validate(const AlertRule& rule);

struct Alert {
  std::string alert_id;
  std::string rule_id;
  EpochSeconds fired_at = 0;
  double value_at_fire = 0.0;
  AlertState state = AlertState::active;
  std::optional<std::string> acknowledged_by;
  std::optional<EpochSeconds> resolved_at;

  bool operator==(const Alert&) const = default;
};

bool satisfies(Comparator c, double value, double threshold) noexcept;

class AlertEngine {
 public:
  /// Replaces any rule with the same id.
  void upsert_rule(const AlertRule& rule);
  const std::map<std::string, AlertRule>& rules() const noexcept { return rules_; }

  /// `window_values` are the metric's values inside the rule's window, oldest
  /// first. A threshold rule holds when the window is non-empty and every
  /// value satisfies it; it fires unless the rule already has an unresolved
  /// alert, and its unresolved alert resolves once the condition stops
  /// holding. A crossing rule fires whenever the side of the threshold of the
  /// newest value differs from the previous evaluation, resolving the alert
  /// of the previous crossing. Throws not_found for an unknown rule.
  std::optional<Alert> evaluate(const std::string& rule_id, std::span<const double> window_values,
                                EpochSeconds now);

  /// Throws not_found, or conflict unless the alert is active.
  Alert acknowledge(const std::string& alert_id, const std::string& user_id);

  const std::vector<Alert>& alerts() const noexcept { return alerts_; }

 private:
  Alert* open_alert(const std::string& rule_id);

  std::map<std::string, AlertRule> rules_;
  std::vector<Alert> alerts_;
  std::map<std::string, int> last_side_;
  std::uint64_t next_id_ = 1;
};

}  // namespace vinesense::alerts
