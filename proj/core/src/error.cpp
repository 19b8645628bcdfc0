#include "vinesense/error.hpp"

namespace vinesense {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::incomplete_input: return "incomplete_input";
    case ErrorCode::invalid_summary: return "invalid_summary";
    case ErrorCode::ordering: return "ordering";
    case ErrorCode::pairing: return "pairing";
    case ErrorCode::undefined_index: return "undefined_index";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::validation: return "validation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::out_of_order: return "out_of_order";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::forbidden: return "forbidden";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

OutOfOrderError::OutOfOrderError(std::int64_t rejected, std::int64_t last_known)
    : Error(ErrorCode::out_of_order,
            "timestamp " + std::to_string(rejected) + " is older than last stored " +
                std::to_string(last_known)),
      rejected_(rejected),
      last_(last_known) {}

}  // namespace vinesense
