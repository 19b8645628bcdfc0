#pragma once

// Append-only time-series store. Each series keeps its recent raw points and,
// once archived, hourly (or coarser) buckets with exact min/max/sum/count.
//
// On disk a series lives in <dir>/<station>/<sensor>.raw (fixed 16-byte
// records appended in place) and <dir>/<station>/<sensor>.agg (rewritten
// atomically on archival). The .agg header carries a watermark: raw points
// below it are already archived, so a crash between writing buckets and
// compacting the raw file is repaired by the next archival run.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "vinesense/calendar.hpp"
#include "vinesense/reading.hpp"
#include "vinesense/sample.hpp"

namespace vinesense::store {

struct SeriesKey {
  std::string station_id;
  SensorKind kind = SensorKind::temperature;

  auto operator<=>(const SeriesKey&) const = default;
};

/// "station/sensor".
std::string to_string(const SeriesKey& key);
/// Inverse of to_string; throws validation.
SeriesKey parse_series_key(std::string_view text);

struct RetentionPolicy {
  int raw_horizon_days = 90;
  EpochSeconds bucket_width = kSecondsPerHour;

  /// Throws configuration unless the horizon is non-negative and the bucket
  /// width divides a day.
  void validate() const;
};

enum class AppendResult { stored, duplicate };
enum class Aggregate { raw, hourly, daily };

std::string_view to_string(Aggregate a) noexcept;
std::optional<Aggregate> aggregate_from_string(std::string_view name) noexcept;

/// How far an archival run gets. `buckets_only` stops after the bucket file
/// is durable, as a crash before raw compaction would.
enum class ArchiveStop { complete, buckets_only };

struct SeriesInfo {
  std::size_t raw_points = 0;
  std::size_t buckets = 0;
  std::optional<EpochSeconds> watermark;
  std::optional<EpochSeconds> last_timestamp;
};

class Store {
 public:
  /// Memory only.
  Store();
  /// Opens (creating if needed) a directory-backed store. With `sync` every
  /// acknowledged append is fsync'ed; otherwise it is flushed to the kernel.
  explicit Store(std::filesystem::path directory, bool sync = false);
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  /// Re-sending a point that is still held raw (same timestamp, bit-equal
  /// value) is a duplicate. Throws conflict for a different value at a stored
  /// timestamp, OutOfOrderError for any other point older than the series
  /// head, validation for a non-finite value or an id unusable as a file name.
  AppendResult append(const SeriesKey& key, EpochSeconds ts, double value);

  /// Points in [from, to). Raw queries return archived buckets where raws
  /// are gone; hourly/daily queries merge raws and buckets per period, daily
  /// periods starting at local midnight for `utc_offset_s`.
  /// Throws not_found for an unknown key, validation when from > to.
  std::vector<Sample> query(const SeriesKey& key, EpochSeconds from, EpochSeconds to,
                            Aggregate aggregate = Aggregate::raw,
                            std::int32_t utc_offset_s = 0) const;

  /// Archives raw points older than now − horizon, aligned down to a bucket
  /// boundary. Returns the number of raw points newly folded into buckets.
  std::size_t downsample(const SeriesKey& key, const RetentionPolicy& policy, EpochSeconds now,
                         ArchiveStop stop = ArchiveStop::complete);
  std::size_t downsample_all(const RetentionPolicy& policy, EpochSeconds now);

  bool contains(const SeriesKey& key) const;
  std::vector<SeriesKey> keys() const;
  std::vector<SeriesKey> keys_for_station(const std::string& station_id) const;
  SeriesInfo info(const SeriesKey& key) const;
  const std::optional<std::filesystem::path>& directory() const noexcept { return directory_; }

 private:
  struct Series;

  Series* find(const SeriesKey& key) const;
  Series& find_or_create(const SeriesKey& key);
  void load_existing();

  std::optional<std::filesystem::path> directory_;
  bool sync_ = false;
  mutable std::shared_mutex map_mutex_;
  std::map<SeriesKey, std::unique_ptr<Series>> series_;
};

/// RFC 4180 report: header "timestamp,<key>,...", one row per distinct
/// timestamp (or bucket start) across the keys, ISO-8601 UTC in column 1,
/// mean values, empty cells where a series has no value. CRLF line endings.
std::string export_report(const Store& store, std::span<const SeriesKey> keys, EpochSeconds from,
                          EpochSeconds to, Aggregate aggregate = Aggregate::raw);

}  // namespace vinesense::store
