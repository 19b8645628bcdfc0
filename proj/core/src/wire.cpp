#include "vinesense/wire.hpp"

#include <charconv>
#include <cmath>

#include <json.hpp>

namespace vinesense::wire {

std::string format_number(double value) {
  if (value == 0.0 && std::signbit(value)) return "-0.0";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string encode(const Reading& r) {
  std::string out = "{\"ts\":";
  out += std::to_string(r.timestamp);
  out += ",\"station\":";
  out += nlohmann::json(r.station_id).dump();
  out += ",\"sensor\":\"";
  out += to_string(r.kind);
  out += "\",\"value\":";
  out += format_number(r.value);
  out += '}';
  return out;
}

std::string encode_batch(std::span<const Reading> readings) {
  std::string out;
  for (const auto& r : readings) {
    out += encode(r);
    out += '\n';
  }
  return out;
}

namespace {

Decoded reject(std::string reason, std::string detail) {
  return Decoded{std::nullopt, std::move(reason), std::move(detail)};
}

constexpr std::string_view kFields[] = {"ts", "station", "sensor", "value"};

}  // namespace

Decoded decode_line(std::string_view line) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return reject("malformed", "not a JSON object");

  std::size_t i = 0;
  for (auto it = j.begin(); it != j.end(); ++it, ++i) {
    bool known = false;
    for (auto f : kFields) known = known || it.key() == f;
    if (!known) return reject("unknown_field", "unexpected field \"" + it.key() + "\"");
    if (i >= std::size(kFields) || it.key() != kFields[i]) {
      return reject("field_order", "fields must be ts, station, sensor, value");
    }
  }
  if (i != std::size(kFields)) return reject("missing_field", "expected ts, station, sensor, value");

  const auto& ts = j["ts"];
  if (!ts.is_number_integer()) return reject("invalid_type", "ts must be an integer");
  const auto& station = j["station"];
  if (!station.is_string() || station.get_ref<const std::string&>().empty()) {
    return reject("invalid_type", "station must be a non-empty string");
  }
  const auto& sensor = j["sensor"];
  if (!sensor.is_string()) return reject("invalid_type", "sensor must be a string");
  const auto kind = sensor_kind_from_string(sensor.get_ref<const std::string&>());
  if (!kind) return reject("unknown_sensor", "unknown sensor \"" + sensor.get<std::string>() + "\"");
  const auto& value = j["value"];
  if (!value.is_number()) return reject("invalid_type", "value must be a number");

  Reading r;
  r.timestamp = ts.is_number_unsigned() ? static_cast<EpochSeconds>(ts.get<std::uint64_t>())
                                        : ts.get<std::int64_t>();
  r.station_id = station.get<std::string>();
  r.kind = *kind;
  r.value = value.get<double>();
  return Decoded{std::move(r), {}, {}};
}

std::vector<std::string_view> split_lines(std::string_view body) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= body.size()) {
    std::size_t end = body.find('\n', start);
    if (end == std::string_view::npos) end = body.size();
    std::string_view line = body.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

}  // namespace vinesense::wire
