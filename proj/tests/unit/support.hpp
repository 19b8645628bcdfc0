#pragma once

// Helpers shared by the unit and acceptance tests.

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "vinesense/config.hpp"
#include "vinesense/reading.hpp"
#include "vinesense/service.hpp"
#include "vinesense/wire.hpp"

namespace vinesense::testing {

/// Directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vinesense-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline constexpr const char* kViewerToken = "viewer-token";
inline constexpr const char* kOperatorToken = "operator-token";
inline constexpr const char* kAdminToken = "admin-token";

/// In-memory config with stations "north" and "south", block "b1" on north
/// and one user per role.
inline config::Config small_vineyard() {
  config::Config c = config::default_config();
  for (const char* id : {"north", "south"}) {
    config::StationConfig s;
    s.station_id = id;
    c.stations[id] = s;
  }
  config::BlockConfig b;
  b.block_id = "b1";
  b.station_id = "north";
  c.blocks["b1"] = b;
  c.tokens[kViewerToken] = {"vera", "Vera", config::Role::viewer};
  c.tokens[kOperatorToken] = {"omar", "Omar", config::Role::operator_};
  c.tokens[kAdminToken] = {"ada", "Ada", config::Role::admin};
  return c;
}

inline std::string line(EpochSeconds ts, const std::string& station, SensorKind kind, double value) {
  return wire::encode(Reading{ts, station, kind, value}) + "\n";
}

inline service::Request request(std::string method, std::string path_and_query, std::string token = kViewerToken,
                                std::string body = {}) {
  service::Request r;
  r.method = std::move(method);
  const auto q = path_and_query.find('?');
  r.path = path_and_query.substr(0, q);
  if (q != std::string::npos) r.query = service::parse_query(path_and_query.substr(q + 1));
  if (!token.empty()) r.authorization = "Bearer " + token;
  r.body = std::move(body);
  return r;
}

}  // namespace vinesense::testing
