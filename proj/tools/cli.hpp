#pragma once

// The vinesense operator tool. main() is a thin wrapper so tests can drive
// every subcommand in-process.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vinesense/fieldsim.hpp"

namespace vinesense::cli {

/// Station layout file: climate, start date and the station list.
struct Layout {
  std::vector<fieldsim::StationSpec> stations;
  fieldsim::SimOptions options;
};

/// Throws configuration with the offending field on a malformed layout.
Layout parse_layout(const std::string& json_text);
Layout load_layout(const std::filesystem::path& path);

struct RunManifest {
  std::uint64_t seed = 1;
  int days = 1;
  std::filesystem::path stations;
  fieldsim::TopologyMode topology = fieldsim::TopologyMode::star;
  double loss = 0.0;
  int retries = 0;
  std::string out;  // http(s) URL or file path
};

/// Relative layout paths resolve against the manifest's directory.
RunManifest load_manifest(const std::filesystem::path& path);

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitService = 3;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vinesense::cli
