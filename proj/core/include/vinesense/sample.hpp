#pragma once

#include <cstdint>

#include "vinesense/calendar.hpp"

namespace vinesense {

/// A raw point (count == 1, min == max == sum) or an archived bucket
/// summarising `count` raw points that started at `timestamp`.
struct Sample {
  EpochSeconds timestamp = 0;
  double min = 0.0;
  double max = 0.0;
  double sum = 0.0;
  std::uint64_t count = 0;

  static constexpr Sample point(EpochSeconds ts, double value) noexcept {
    return {ts, value, value, value, 1};
  }

  double mean() const noexcept { return count == 1 ? sum : sum / static_cast<double>(count); }
  bool is_raw() const noexcept { return count == 1; }

  bool operator==(const Sample&) const = default;
};

}  // namespace vinesense
