#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vinesense {

enum class ErrorCode {
  domain,            // argument outside the mathematical domain of a formula
  incomplete_input,  // a required field is missing
  invalid_summary,   // DailySummary internally inconsistent
  ordering,          // sequence not sorted / out of season
  pairing,           // readings that must be simultaneous are not
  undefined_index,   // ratio index with zero denominator
  configuration,
  validation,
  not_found,
  out_of_order,      // store append older than the last stored point
  conflict,
  forbidden,
  unauthorized,
  io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the store when a point is older than the series head.
class OutOfOrderError : public Error {
 public:
  OutOfOrderError(std::int64_t rejected, std::int64_t last_known);

  std::int64_t rejected_timestamp() const noexcept { return rejected_; }
  std::int64_t last_timestamp() const noexcept { return last_; }

 private:
  std::int64_t rejected_;
  std::int64_t last_;
};

}  // namespace vinesense
