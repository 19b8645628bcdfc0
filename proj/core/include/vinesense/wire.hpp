#pragma once

// Ingestion wire format: newline-delimited UTF-8 JSON, one reading per line,
//   {"ts":<epoch_s>,"station":"<id>","sensor":"<kind>","value":<number>}
// with the fields in exactly that order and nothing else.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vinesense/reading.hpp"

namespace vinesense::wire {

/// Shortest decimal that parses back to the same double.
std::string format_number(double value);

/// One record, without the trailing newline.
std::string encode(const Reading& reading);
/// Records joined with '\n', each line terminated.
std::string encode_batch(std::span<const Reading> readings);

struct Decoded {
  std::optional<Reading> reading;
  std::string reason;  // machine-readable code when rejected
  std::string detail;
};

Decoded decode_line(std::string_view line);

/// Splits a body into lines, dropping a trailing '\r' and empty lines.
std::vector<std::string_view> split_lines(std::string_view body);

}  // namespace vinesense::wire
