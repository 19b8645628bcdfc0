#include "vinesense/alerts.hpp"

#include <algorithm>
#include <cmath>

#include "vinesense/error.hpp"

namespace vinesense::alerts {

std::string_view to_string(Comparator c) noexcept {
  switch (c) {
    case Comparator::lt: return "<";
    case Comparator::le: return "<=";
    case Comparator::gt: return ">";
    case Comparator::ge: return ">=";
    case Comparator::crosses: return "crosses";
  }
  return "unknown";
}

std::optional<Comparator> comparator_from_string(std::string_view t) noexcept {
  if (t == "<" || t == "lt") return Comparator::lt;
  if (t == "<=" || t == "≤" || t == "le") return Comparator::le;
  if (t == ">" || t == "gt") return Comparator::gt;
  if (t == ">=" || t == "≥" || t == "ge") return Comparator::ge;
  if (t == "crosses") return Comparator::crosses;
  return std::nullopt;
}

std::string_view to_string(Severity s) noexcept {
  switch (s) {
    case Severity::info: return "info";
    case Severity::warning: return "warning";
    case Severity::critical: return "critical";
  }
  return "unknown";
}

std::optional<Severity> severity_from_string(std::string_view t) noexcept {
  if (t == "info") return Severity::info;
  if (t == "warning") return Severity::warning;
  if (t == "critical") return Severity::critical;
  return std::nullopt;
}

std::string_view to_string(AlertState s) noexcept {
  switch (s) {
    case AlertState::active: return "active";
    case AlertState::acknowledged: return "acknowledged";
    case AlertState::resolved: return "resolved";
  }
  return "unknown";
}

std::optional<AlertState> alert_state_from_string(std::string_view t) noexcept {
  if (t == "active") return AlertState::active;
  if (t == "acknowledged") return AlertState::acknowledged;
  if (t == "resolved") return AlertState::resolved;
  return std::nullopt;
}

void validate(const AlertRule& rule) {
  if (rule.rule_id.empty()) throw Error(ErrorCode::validation, "rule_id must not be empty");
  if (rule.metric.empty()) throw Error(ErrorCode::validation, "metric must not be empty");
  if (rule.window_s <= 0) throw Error(ErrorCode::validation, "window must be positive");
  if (!std::isfinite(rule.threshold)) throw Error(ErrorCode::validation, "threshold must be finite");
}

bool satisfies(Comparator c, double v, double t) noexcept {
  switch (c) {
    case Comparator::lt: return v < t;
    case Comparator::le: return v <= t;
    case Comparator::gt: return v > t;
    case Comparator::ge: return v >= t;
    case Comparator::crosses: return false;
  }
  return false;
}

void AlertEngine::upsert_rule(const AlertRule& rule) {
  validate(rule);
  auto it = rules_.find(rule.rule_id);
  if (it != rules_.end() && it->second.comparator != rule.comparator) last_side_.erase(rule.rule_id);
  rules_[rule.rule_id] = rule;
}

Alert* AlertEngine::open_alert(const std::string& rule_id) {
  for (auto& a : alerts_) {
    if (a.rule_id == rule_id && a.state != AlertState::resolved) return &a;
  }
  return nullptr;
}

std::optional<Alert> AlertEngine::evaluate(const std::string& rule_id,
                                           std::span<const double> values, EpochSeconds now) {
  auto it = rules_.find(rule_id);
  if (it == rules_.end()) throw Error(ErrorCode::not_found, "unknown rule " + rule_id);
  const AlertRule& rule = it->second;
  if (!rule.enabled) return std::nullopt;

  auto fire = [&](double value) {
    Alert a;
    a.alert_id = "alert-" + std::to_string(next_id_++);
    a.rule_id = rule_id;
    a.fired_at = now;
    a.value_at_fire = value;
    alerts_.push_back(a);
    return a;
  };
  auto resolve_open = [&] {
    if (Alert* open = open_alert(rule_id)) {
      open->state = AlertState::resolved;
      open->resolved_at = now;
    }
  };

  if (rule.comparator == Comparator::crosses) {
    if (values.empty()) return std::nullopt;
    const int side = values.back() >= rule.threshold ? 1 : -1;
    auto [prev, inserted] = last_side_.try_emplace(rule_id, side);
    if (inserted || prev->second == side) return std::nullopt;
    prev->second = side;
    resolve_open();
    return fire(values.back());
  }

  const bool holds = !values.empty() && std::all_of(values.begin(), values.end(), [&](double v) {
    return satisfies(rule.comparator, v, rule.threshold);
  });
  if (!holds) {
    resolve_open();
    return std::nullopt;
  }
  if (open_alert(rule_id)) return std::nullopt;
  return fire(values.back());
}

Alert AlertEngine::acknowledge(const std::string& alert_id, const std::string& user_id) {
  auto it = std::find_if(alerts_.begin(), alerts_.end(),
                         [&](const Alert& a) { return a.alert_id == alert_id; });
  if (it == alerts_.end()) throw Error(ErrorCode::not_found, "unknown alert " + alert_id);
  if (it->state != AlertState::active) {
    throw Error(ErrorCode::conflict,
                "alert " + alert_id + " is already " + std::string(to_string(it->state)));
  }
  it->state = AlertState::acknowledged;
  it->acknowledged_by = user_id;
  return *it;
}

}  // namespace vinesense::alerts
