#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "support.hpp"
#include "vinesense/http.hpp"

using namespace vinesense;
using vinesense::testing::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const char* kOneStation = R"({"climate":"napa","start_date":"2025-06-01","stations":[{"id":"gw","x":0,"y":0,"gateway":true}]})";
const char* kThreeStations =
    R"({"climate":"napa","start_date":"2025-06-01","stations":[{"id":"gw","x":0,"y":0,"gateway":true},)"
    R"({"id":"north","x":0,"y":300},{"id":"south","x":0,"y":-300}]})";

const char* kConfig = R"({"version":1,
  "stations":[{"id":"gw"},{"id":"north"},{"id":"south"}],
  "users":[{"user_id":"ada","role":"admin","token":"adm"},{"user_id":"vera","role":"viewer","token":"view"},
           {"user_id":"omar","role":"operator","token":"op"}]})";

/// Service built from kConfig, served on a free port.
struct LiveService {
  LiveService() : svc(config::parse_config(kConfig)), server(svc) {
    server.start();
    url = "http://127.0.0.1:" + std::to_string(server.port());
  }
  ~LiveService() { server.stop(); }
  service::Service svc;
  http::Server server;
  std::string url;
};

std::string dead_url() {
  service::Service svc(config::parse_config(kConfig));
  http::Server s(svc);
  s.start();
  const int port = s.port();
  s.stop();
  return "http://127.0.0.1:" + std::to_string(port);
}

}  // namespace

TEST(SimRun, OneStationOneDayIs96Frames) {
  TempDir dir;
  write(dir / "layout.json", kOneStation);
  const auto r = cli_run({"sim-run", "--stations", (dir / "layout.json").string(), "--days", "1", "--loss", "0",
                          "--out", (dir / "frames.ndjson").string()});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  std::set<std::string> stamps;
  std::istringstream in(slurp(dir / "frames.ndjson"));
  for (std::string l; std::getline(in, l);) stamps.insert(std::to_string(nlohmann::json::parse(l)["ts"].get<long>()));
  EXPECT_EQ(stamps.size(), 96u);
  EXPECT_NE(r.out.find("delivery"), std::string::npos);
  EXPECT_NE(r.out.find("gw"), std::string::npos);
}

TEST(SimRun, ManifestRunsAreIdentical) {
  TempDir dir;
  write(dir / "layout.json", kThreeStations);
  write(dir / "a.json", R"({"seed":7,"days":2,"stations":"layout.json","topology":"mesh","loss":0.2,"retries":1,"out":")" +
                            (dir / "a.ndjson").string() + "\"}");
  write(dir / "b.json", R"({"seed":7,"days":2,"stations":"layout.json","topology":"mesh","loss":0.2,"retries":1,"out":")" +
                            (dir / "b.ndjson").string() + "\"}");
  ASSERT_EQ(cli_run({"sim-run", "--manifest", (dir / "a.json").string()}).code, 0);
  ASSERT_EQ(cli_run({"sim-run", "--manifest", (dir / "b.json").string()}).code, 0);
  const auto a = slurp(dir / "a.ndjson");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b.ndjson"));
  // An explicit flag overrides the manifest.
  ASSERT_EQ(cli_run({"sim-run", "--manifest", (dir / "b.json").string(), "--seed", "8"}).code, 0);
  EXPECT_NE(a, slurp(dir / "b.ndjson"));
}

TEST(SimRun, BadLayoutFailsWithMessage) {
  TempDir dir;
  write(dir / "layout.json", R"({"stations":[{"id":"gw","x":"zero","y":0,"gateway":true}]})");
  const auto r = cli_run({"sim-run", "--stations", (dir / "layout.json").string(), "--out", (dir / "f").string()});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("layout.stations[0]"), std::string::npos) << r.err;
  write(dir / "two.json", R"({"stations":[{"id":"a","x":0,"y":0},{"id":"b","x":1,"y":1}]})");
  EXPECT_NE(cli_run({"sim-run", "--stations", (dir / "two.json").string(), "--out", (dir / "f").string()}).code, 0);
  EXPECT_NE(cli_run({"sim-run", "--stations", (dir / "missing.json").string(), "--out", (dir / "f").string()}).code, 0);
}

TEST(SimRun, UnreachableServiceKeepsSpool) {
  TempDir dir;
  write(dir / "layout.json", kOneStation);
  const auto r = cli_run({"--token", "op", "sim-run", "--stations", (dir / "layout.json").string(), "--days", "2",
                          "--out", dead_url(), "--spool", (dir / "spool.ndjson").string()});
  EXPECT_EQ(r.code, cli::kExitService);
  EXPECT_NE(r.err.find("spool.ndjson"), std::string::npos) << r.err;
  EXPECT_FALSE(slurp(dir / "spool.ndjson").empty());
}

TEST(SimRun, DeliversToService) {
  TempDir dir;
  write(dir / "layout.json", kThreeStations);
  LiveService live;
  const auto r = cli_run({"--token", "op", "sim-run", "--stations", (dir / "layout.json").string(), "--days", "1",
                          "--out", live.url});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(live.svc.store().keys_for_station("north").size(), fieldsim::standard_sensors().size());
}

TEST(Replay, IdempotentAndMetricsMatchOffline) {
  TempDir dir;
  write(dir / "layout.json", kThreeStations);
  write(dir / "config.json", kConfig);
  ASSERT_EQ(cli_run({"sim-run", "--stations", (dir / "layout.json").string(), "--days", "3", "--seed", "5",
                     "--out", (dir / "frames.ndjson").string()}).code, 0);
  LiveService live;
  const auto first = cli_run({"--token", "op", "replay", "--in", (dir / "frames.ndjson").string(), "--out", live.url});
  ASSERT_EQ(first.code, 0) << first.err;
  const auto second = cli_run({"--token", "op", "replay", "--in", (dir / "frames.ndjson").string(), "--out", live.url,
                               "--batch", "1000"});
  ASSERT_EQ(second.code, 0) << second.err;

  const auto online = cli_run({"--token", "view", "metrics", "--station", "north", "--from", "2025-06-01", "--to",
                               "2025-06-04", "--service", live.url});
  const auto offline = cli_run({"--config", (dir / "config.json").string(), "metrics", "--station", "north", "--from",
                                "2025-06-01", "--to", "2025-06-04", "--in", (dir / "frames.ndjson").string()});
  ASSERT_EQ(online.code, 0) << online.err;
  ASSERT_EQ(offline.code, 0) << offline.err;
  EXPECT_EQ(online.out, offline.out);
  EXPECT_NE(online.out.find("2025-06-04      --"), std::string::npos) << online.out;
}

TEST(Replay, RejectedLinesGiveInputExit) {
  TempDir dir;
  write(dir / "bad.ndjson", vinesense::testing::line(100, "north", SensorKind::rain, 0) + "garbage\n");
  LiveService live;
  const auto r = cli_run({"--token", "op", "replay", "--in", (dir / "bad.ndjson").string(), "--out", live.url});
  EXPECT_EQ(r.code, cli::kExitInput);
  EXPECT_NE(r.err.find("malformed"), std::string::npos) << r.err;
}

TEST(Report, FileMatchesEndpoint) {
  TempDir dir;
  LiveService live;
  std::string batch;
  for (int i = 0; i < 10; ++i) {
    batch += vinesense::testing::line(1000 + i * 900, "north", SensorKind::temperature, 10 + i);
    if (i % 3 == 0) batch += vinesense::testing::line(1000 + i * 900 + 60, "south", SensorKind::rain, 0.2 * i);
  }
  live.svc.ingest(batch);
  const auto r = cli_run({"--token", "view", "report", "--key", "north/temperature", "--key", "south/rain",
                          "--service", live.url, "--out", (dir / "r.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  http::Client c(live.url, "view");
  EXPECT_EQ(slurp(dir / "r.csv"), c.get("/v1/report?key=north%2Ftemperature&key=south%2Frain").body);

  EXPECT_NE(cli_run({"--token", "view", "report", "--key", "north/snow", "--service", live.url, "--out",
                     (dir / "x.csv").string()}).code, 0);
  EXPECT_NE(cli_run({"--token", "view", "report", "--key", "east/rain", "--service", live.url, "--out",
                     (dir / "x.csv").string()}).code, 0);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli_run({}).code, cli::kExitUsage);
  EXPECT_EQ(cli_run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(cli_run({"metrics", "--station", "x"}).code, cli::kExitUsage);
  EXPECT_EQ(cli_run({"--help"}).code, cli::kExitOk);
}
