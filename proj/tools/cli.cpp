#include "cli.hpp"

#include <csignal>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vinesense/config.hpp"
#include "vinesense/error.hpp"
#include "vinesense/http.hpp"
#include "vinesense/service.hpp"
#include "vinesense/wire.hpp"

namespace vinesense::cli {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::configuration, where + ": " + what);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) bad(what, "not valid JSON");
  if (!j.is_object()) bad(what, "expected a JSON object");
  return j;
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) bad(where, "unknown field \"" + it.key() + "\"");
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key, "missing or wrong type");
  }
}

std::string url_path(const std::string& segment) {
  std::string out;
  for (unsigned char c : segment) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

config::Config resolve_config(const std::string& path) {
  if (!path.empty()) return config::load_config(path);
  if (std::getenv(config::kConfigEnvVar)) return config::load_config_from_env();
  return config::default_config();
}

struct Common {
  std::string token;
  std::string config_path;
};

// ------------------------------------------------------------------ sim-run

struct SimArgs {
  std::string manifest;
  std::uint64_t seed = 1;
  int days = 1;
  std::string stations;
  std::string topology = "star";
  double loss = 0.0;
  int retries = 0;
  std::string out;
  std::string spool;
};

void print_summary(std::ostream& out, const fieldsim::Simulation& sim, const fieldsim::RunStats& stats,
                   const fieldsim::LinkModel& link) {
  const auto& topo = sim.topology();
  char line[256];
  std::snprintf(line, sizeof line, "topology %s, gateway %s, %zu stations\n",
                std::string(fieldsim::to_string(topo.mode)).c_str(), topo.gateway.c_str(),
                sim.stations().size());
  out << line;
  for (const auto& w : topo.warnings) out << "warning: " << w << '\n';
  for (const auto& u : topo.unreachable) out << "warning: station " << u << " cannot reach the gateway\n";
  std::snprintf(line, sizeof line, "frames emitted %llu, delivered %llu, delivery ratio %.4f (analytic %.4f)\n",
                static_cast<unsigned long long>(stats.emitted), static_cast<unsigned long long>(stats.delivered),
                stats.delivery_ratio, fieldsim::analytic_delivery_ratio(topo, link, sim.stations()));
  out << line;
  std::snprintf(line, sizeof line, "mean hops %.3f\n", stats.mean_hops);
  out << line;
  out << "station               emitted  delivered       lost  longest_gap\n";
  for (const auto& [id, s] : stats.per_station) {
    std::snprintf(line, sizeof line, "%-20s %8llu %10llu %10llu %12llu\n", id.c_str(),
                  static_cast<unsigned long long>(s.emitted), static_cast<unsigned long long>(s.delivered),
                  static_cast<unsigned long long>(s.lost), static_cast<unsigned long long>(s.longest_gap));
    out << line;
  }
}

int sim_run(SimArgs a, const CLI::App& cmd, const Common& common, std::ostream& out, std::ostream& err) {
  if (!a.manifest.empty()) {
    const RunManifest m = load_manifest(a.manifest);
    // Flags given explicitly on the command line win over the manifest.
    if (cmd.count("--seed") == 0) a.seed = m.seed;
    if (cmd.count("--days") == 0) a.days = m.days;
    if (cmd.count("--stations") == 0) a.stations = m.stations.string();
    if (cmd.count("--topology") == 0) a.topology = std::string(fieldsim::to_string(m.topology));
    if (cmd.count("--loss") == 0) a.loss = m.loss;
    if (cmd.count("--retries") == 0) a.retries = m.retries;
    if (cmd.count("--out") == 0) a.out = m.out;
  }
  if (a.stations.empty()) throw Error(ErrorCode::configuration, "--stations (or a manifest) is required");
  if (a.out.empty()) throw Error(ErrorCode::configuration, "--out (or a manifest) is required");
  if (a.days <= 0) throw Error(ErrorCode::configuration, "--days must be positive");
  auto mode = fieldsim::topology_mode_from_string(a.topology);
  if (!mode) throw Error(ErrorCode::configuration, "--topology must be star or mesh");

  Layout layout = load_layout(a.stations);
  layout.options.seed = a.seed;
  fieldsim::LinkModel link{a.loss, a.retries, a.seed};
  fieldsim::validate(link);
  fieldsim::Simulation sim(layout.stations, *mode, link, layout.options);

  const bool to_service = http::looks_like_url(a.out);
  const std::string file_path = to_service ? a.spool : a.out;
  std::ofstream file;
  if (!file_path.empty()) {
    file.open(file_path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorCode::io, "cannot write " + file_path);
  }
  std::optional<http::Client> client;
  if (to_service) client.emplace(a.out, common.token);

  std::vector<fieldsim::FateEntry> fates;
  std::size_t rejected = 0;
  for (int day = 0; day < a.days; ++day) {
    std::vector<fieldsim::Frame> frames;
    for (int t = 0; t < kTicksPerDay; ++t) {
      auto step = sim.step();
      for (auto& f : step.delivered) frames.push_back(std::move(f));
      for (auto& f : step.fates) fates.push_back(std::move(f));
    }
    const std::string body = fieldsim::encode_frames(frames);
    if (file.is_open()) {
      file << body;
      file.flush();
    }
    if (client && !body.empty()) {
      http::ClientResponse res;
      try {
        res = client->post("/v1/ingest", body);
      } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        if (!file_path.empty()) err << "frames generated so far are kept in " << file_path << '\n';
        return kExitService;
      }
      if (res.status != 200) {
        err << "error: service answered " << res.status << ": " << res.body << '\n';
        if (!file_path.empty()) err << "frames generated so far are kept in " << file_path << '\n';
        return kExitService;
      }
      rejected += json::parse(res.body).value("rejected", std::size_t{0});
    }
  }
  print_summary(out, sim, fieldsim::summarize(fates), link);
  if (client) out << "service rejected " << rejected << " lines\n";
  return kExitOk;
}

// ------------------------------------------------------------------ replay

int replay(const std::string& in_path, const std::string& url, std::size_t batch_lines, const Common& common,
           std::ostream& out, std::ostream& err) {
  if (!http::looks_like_url(url)) throw Error(ErrorCode::configuration, "--out must be a service URL");
  const std::string data = read_file(in_path);
  http::Client client(url, common.token);
  std::size_t accepted = 0, duplicates = 0, rejected = 0, lines = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t end = pos;
    for (std::size_t n = 0; n < batch_lines && end < data.size(); ++n) {
      const std::size_t nl = data.find('\n', end);
      end = nl == std::string::npos ? data.size() : nl + 1;
    }
    http::ClientResponse res;
    try {
      res = client.post("/v1/ingest", data.substr(pos, end - pos));
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitService;
    }
    if (res.status != 200) {
      err << "error: service answered " << res.status << ": " << res.body << '\n';
      return kExitService;
    }
    const json j = json::parse(res.body);
    for (const auto& r : j.at("results")) {
      if (r.at("status") == "rejected") {
        err << "line " << (lines + r.at("line").get<std::size_t>()) << ": " << r.value("reason", "")
            << ' ' << r.value("detail", "") << '\n';
      }
    }
    accepted += j.at("accepted").get<std::size_t>();
    duplicates += j.at("duplicates").get<std::size_t>();
    rejected += j.at("rejected").get<std::size_t>();
    lines += static_cast<std::size_t>(std::count(data.begin() + static_cast<std::ptrdiff_t>(pos),
                                                 data.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
    pos = end;
  }
  out << "accepted " << accepted << " (duplicates " << duplicates << "), rejected " << rejected << '\n';
  return rejected == 0 ? kExitOk : kExitInput;
}

// ------------------------------------------------------------------ metrics

int metrics(const std::string& station, const std::string& from, const std::string& to,
            const std::string& in_path, const std::string& service_url, const Common& common, std::ostream& out,
            std::ostream& err) {
  const Date d_from = parse_date(from);
  const Date d_to = parse_date(to);
  if (!service_url.empty()) {
    http::Client client(service_url, common.token);
    http::ClientResponse res;
    try {
      res = client.get("/v1/metrics/" + url_path(station) + "?from=" + to_iso(d_from) + "&to=" + to_iso(d_to) +
                       "&format=table");
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitService;
    }
    if (res.status != 200) {
      err << "error: service answered " << res.status << ": " << res.body << '\n';
      return res.status == 404 ? kExitInput : kExitService;
    }
    out << res.body;
    return kExitOk;
  }
  if (in_path.empty()) throw Error(ErrorCode::configuration, "metrics needs --in <file> or --service <url>");
  config::Config cfg = resolve_config(common.config_path);
  cfg.data_dir.reset();
  cfg.auto_register = true;
  service::Service svc(std::move(cfg));
  const auto result = svc.ingest(read_file(in_path));
  if (result.rejected > 0) err << "warning: " << result.rejected << " input lines rejected\n";
  const auto rows = svc.daily_metrics(station, d_from, d_to);
  out << agromet::render_metrics_table(rows);
  return kExitOk;
}

// ------------------------------------------------------------------ report

int report(const std::vector<std::string>& keys, const std::string& from, const std::string& to,
           const std::string& aggregate, const std::string& service_url, const std::string& out_path,
           const Common& common, std::ostream& out, std::ostream& err) {
  std::string query;
  for (const auto& k : keys) {
    store::parse_series_key(k);
    query += (query.empty() ? "?" : "&") + std::string("key=") + url_path(k);
  }
  if (!from.empty()) query += "&from=" + url_path(from);
  if (!to.empty()) query += "&to=" + url_path(to);
  if (!aggregate.empty()) query += "&aggregate=" + url_path(aggregate);
  http::Client client(service_url, common.token);
  http::ClientResponse res;
  try {
    res = client.get("/v1/report" + query);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitService;
  }
  if (res.status != 200) {
    err << "error: service answered " << res.status << ": " << res.body << '\n';
    return res.status >= 500 ? kExitService : kExitInput;
  }
  if (out_path.empty() || out_path == "-") {
    out << res.body;
    return kExitOk;
  }
  std::ofstream f(out_path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::io, "cannot write " + out_path);
  f << res.body;
  out << "wrote " << res.body.size() << " bytes to " << out_path << '\n';
  return kExitOk;
}

// ------------------------------------------------------------------ serve

int serve(const std::string& host, int port, int archive_interval_s, const Common& common, std::ostream& out) {
  if (common.config_path.empty() && !std::getenv(config::kConfigEnvVar)) {
    throw Error(ErrorCode::configuration,
                std::string("serve needs --config or the ") + config::kConfigEnvVar + " environment variable");
  }
  service::Service svc(resolve_config(common.config_path));
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  http::Server server(svc, host, port);
  server.start();
  out << "listening on http://" << host << ':' << server.port() << std::endl;
  for (;;) {
    svc.run_archival(static_cast<EpochSeconds>(std::time(nullptr)));
    timespec wait{archive_interval_s, 0};
    if (sigtimedwait(&set, nullptr, &wait) > 0) break;
  }
  server.stop();
  return kExitOk;
}

}  // namespace

// ------------------------------------------------------------------ files

Layout parse_layout(const std::string& text) {
  const json j = parse_json(text, "layout");
  only_keys(j, "layout", {"climate", "start_date", "utc_offset_minutes", "vineyard_area_ha", "noise_scale",
                          "stations"});
  Layout layout;
  if (j.contains("climate")) {
    try {
      layout.options.climate = fieldsim::climate_profile(get<std::string>(j, "climate", "layout"));
    } catch (const Error& e) {
      bad("layout.climate", e.what());
    }
  }
  if (j.contains("start_date")) {
    try {
      layout.options.start_date = parse_date(get<std::string>(j, "start_date", "layout"));
    } catch (const Error& e) {
      bad("layout.start_date", e.what());
    }
  }
  if (j.contains("utc_offset_minutes")) {
    layout.options.utc_offset_s = get<std::int32_t>(j, "utc_offset_minutes", "layout") * 60;
  }
  if (j.contains("vineyard_area_ha")) {
    layout.options.topology.vineyard_area_ha = get<double>(j, "vineyard_area_ha", "layout");
  }
  if (j.contains("noise_scale")) layout.options.noise_scale = get<double>(j, "noise_scale", "layout");
  if (!j.contains("stations") || !j.at("stations").is_array() || j.at("stations").empty()) {
    bad("layout.stations", "expected a non-empty array");
  }
  std::size_t i = 0;
  for (const auto& s : j.at("stations")) {
    const std::string where = "layout.stations[" + std::to_string(i++) + "]";
    if (!s.is_object()) bad(where, "expected an object");
    only_keys(s, where, {"id", "x", "y", "gateway", "range_m", "sensors"});
    fieldsim::StationSpec spec;
    spec.station_id = get<std::string>(s, "id", where);
    spec.position = {get<double>(s, "x", where), get<double>(s, "y", where)};
    if (s.contains("gateway")) spec.is_gateway = get<bool>(s, "gateway", where);
    if (s.contains("range_m")) spec.radio_range_m = get<double>(s, "range_m", where);
    if (s.contains("sensors")) {
      for (const auto& name : get<std::vector<std::string>>(s, "sensors", where)) {
        auto kind = sensor_kind_from_string(name);
        if (!kind) bad(where + ".sensors", "unknown sensor \"" + name + "\"");
        spec.sensors.push_back(*kind);
      }
    } else {
      spec.sensors = fieldsim::standard_sensors();
    }
    layout.stations.push_back(std::move(spec));
  }
  return layout;
}

Layout load_layout(const std::filesystem::path& path) {
  try {
    return parse_layout(read_file(path));
  } catch (const Error& e) {
    throw Error(ErrorCode::configuration, path.string() + ": " + e.what());
  }
}

RunManifest load_manifest(const std::filesystem::path& path) {
  const json j = parse_json(read_file(path), path.string());
  const std::string where = path.string();
  only_keys(j, where, {"seed", "days", "stations", "topology", "loss", "retries", "out"});
  RunManifest m;
  if (j.contains("seed")) m.seed = get<std::uint64_t>(j, "seed", where);
  if (j.contains("days")) m.days = get<int>(j, "days", where);
  m.stations = get<std::string>(j, "stations", where);
  if (m.stations.is_relative()) m.stations = path.parent_path() / m.stations;
  if (j.contains("topology")) {
    auto mode = fieldsim::topology_mode_from_string(get<std::string>(j, "topology", where));
    if (!mode) bad(where + ".topology", "must be star or mesh");
    m.topology = *mode;
  }
  if (j.contains("loss")) m.loss = get<double>(j, "loss", where);
  if (j.contains("retries")) m.retries = get<int>(j, "retries", where);
  m.out = get<std::string>(j, "out", where);
  return m;
}

// ------------------------------------------------------------------ entry

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"vinesense: vineyard sensor simulation, ingestion and reporting"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--token", common.token, "Bearer token for service requests")->envname("VINESENSE_TOKEN");
  app.add_option("--config", common.config_path, "Configuration file (defaults to $VINESENSE_CONFIG)");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("sim-run", "Simulate stations and deliver frames to a file or service");
  sim_cmd->add_option("--manifest", sim.manifest, "Run manifest (JSON); explicit flags override it");
  sim_cmd->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--days", sim.days, "Simulated days")->capture_default_str();
  sim_cmd->add_option("--stations", sim.stations, "Station layout file (JSON)");
  sim_cmd->add_option("--topology", sim.topology, "star or mesh")->capture_default_str();
  sim_cmd->add_option("--loss", sim.loss, "Per-hop loss probability")->capture_default_str();
  sim_cmd->add_option("--retries", sim.retries, "Retransmissions per hop")->capture_default_str();
  sim_cmd->add_option("--out", sim.out, "Service URL (http://host:port) or output file");
  sim_cmd->add_option("--spool", sim.spool, "With a service URL, also write frames to this file");

  std::string replay_in, replay_out;
  std::size_t replay_batch = 5000;
  auto* replay_cmd = app.add_subcommand("replay", "Post a frame file to the service");
  replay_cmd->add_option("--in", replay_in, "Frame file (wire format)")->required();
  replay_cmd->add_option("--out", replay_out, "Service URL")->required();
  replay_cmd->add_option("--batch", replay_batch, "Lines per request")->capture_default_str()->check(
      CLI::PositiveNumber);

  std::string m_station, m_from, m_to, m_in, m_service;
  auto* metrics_cmd = app.add_subcommand("metrics", "Print daily metrics for a station");
  metrics_cmd->add_option("--station", m_station, "Station id")->required();
  metrics_cmd->add_option("--from", m_from, "First local day (YYYY-MM-DD)")->required();
  metrics_cmd->add_option("--to", m_to, "Last local day (YYYY-MM-DD)")->required();
  auto* m_in_opt = metrics_cmd->add_option("--in", m_in, "Compute offline from a frame file");
  metrics_cmd->add_option("--service", m_service, "Fetch from the service at this URL")->excludes(m_in_opt);

  std::vector<std::string> r_keys;
  std::string r_from, r_to, r_aggregate, r_service, r_out;
  auto* report_cmd = app.add_subcommand("report", "Export series as CSV through the service");
  report_cmd->add_option("--key", r_keys, "Series key station/sensor (repeatable)")->required();
  report_cmd->add_option("--from", r_from, "Start (ISO-8601 or epoch seconds, inclusive)");
  report_cmd->add_option("--to", r_to, "End (ISO-8601 or epoch seconds, exclusive)");
  report_cmd->add_option("--aggregate", r_aggregate, "raw, hourly or daily");
  report_cmd->add_option("--service", r_service, "Service URL")->required();
  report_cmd->add_option("--out", r_out, "Output CSV path; '-' for stdout");

  std::string s_host = "127.0.0.1";
  int s_port = 8080;
  int s_archive = 3600;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--host", s_host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", s_port, "Port; 0 picks a free one")->capture_default_str();
  serve_cmd->add_option("--archive-interval", s_archive, "Seconds between archival runs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim_cmd) return sim_run(sim, *sim_cmd, common, out, err);
    if (*replay_cmd) return replay(replay_in, replay_out, replay_batch, common, out, err);
    if (*metrics_cmd) return metrics(m_station, m_from, m_to, m_in, m_service, common, out, err);
    if (*report_cmd) return report(r_keys, r_from, r_to, r_aggregate, r_service, r_out, common, out, err);
    if (*serve_cmd) return serve(s_host, s_port, s_archive, common, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::io ? kExitService : kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"vinesense"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace vinesense::cli
