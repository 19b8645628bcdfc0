#include <benchmark/benchmark.h>

#include <iterator>
#include <string>
#include <vector>

#include "vinesense/agromet.hpp"
#include "vinesense/config.hpp"
#include "vinesense/fieldsim.hpp"
#include "vinesense/service.hpp"
#include "vinesense/store.hpp"

using namespace vinesense;

namespace {

void BM_Et0Daily(benchmark::State& state) {
  agromet::DailySummary d;
  d.t_min = 12.3;
  d.t_max = 21.5;
  d.rh_min = 63.0;
  d.rh_max = 84.0;
  d.rh_mean = 73.5;
  d.wind_mean_2m = 2.078;
  d.solar_mj = 22.07;
  for (auto _ : state) benchmark::DoNotOptimize(agromet::et0_daily(d, 50.8, 187, 100.0));
}
BENCHMARK(BM_Et0Daily);

void BM_StoreAppend(benchmark::State& state) {
  store::Store s;
  const store::SeriesKey key{"north", SensorKind::temperature};
  EpochSeconds ts = 1'700'000'000;
  for (auto _ : state) s.append(key, ts += 900, 18.5);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StoreAppend);

void BM_StoreQueryHourly(benchmark::State& state) {
  store::Store s;
  const store::SeriesKey key{"north", SensorKind::temperature};
  const EpochSeconds start = 1'700'000'000;
  for (int i = 0; i < state.range(0); ++i) s.append(key, start + 900 * i, i % 37);
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.query(key, start, start + 900 * state.range(0), store::Aggregate::hourly));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_StoreQueryHourly)->Arg(96 * 30)->Arg(96 * 365);

std::vector<fieldsim::StationSpec> three_stations() {
  std::vector<fieldsim::StationSpec> out;
  for (auto [id, x, gw] : {std::tuple{"gw", 0.0, true}, {"north", 300.0, false}, {"south", -300.0, false}}) {
    out.push_back({id, {x, 0.0}, fieldsim::standard_sensors(), gw, fieldsim::kShortRangeRadioM});
  }
  return out;
}

void BM_SimulationStep(benchmark::State& state) {
  fieldsim::Simulation sim(three_stations(), fieldsim::TopologyMode::mesh, {0.1, 1, 7}, {});
  for (auto _ : state) benchmark::DoNotOptimize(sim.step());
}
BENCHMARK(BM_SimulationStep);

void BM_ServiceIngestDay(benchmark::State& state) {
  fieldsim::Simulation sim(three_stations(), fieldsim::TopologyMode::star, {0.0, 0, 7}, {});
  std::vector<fieldsim::Frame> frames;
  for (int t = 0; t < kTicksPerDay; ++t) {
    auto step = sim.step();
    std::move(step.delivered.begin(), step.delivered.end(), std::back_inserter(frames));
  }
  const std::string body = fieldsim::encode_frames(frames);
  config::Config cfg;
  for (const char* id : {"gw", "north", "south"}) {
    config::StationConfig st;
    st.station_id = id;
    cfg.stations[id] = st;
  }
  for (auto _ : state) {
    state.PauseTiming();
    service::Service svc(cfg);
    state.ResumeTiming();
    benchmark::DoNotOptimize(svc.ingest(body));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(body.size()));
}
BENCHMARK(BM_ServiceIngestDay);

}  // namespace
BENCHMARK_MAIN();
