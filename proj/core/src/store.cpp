#include "vinesense/store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <mutex>

#include <fcntl.h>
#include <unistd.h>

#include "vinesense/csv.hpp"
#include "vinesense/error.hpp"
#include "vinesense/wire.hpp"

namespace vinesense::store {

namespace fs = std::filesystem;

namespace {

constexpr char kRawMagic[8] = {'V', 'S', 'R', 'A', 'W', '0', '0', '1'};
constexpr char kAggMagic[8] = {'V', 'S', 'A', 'G', 'G', '0', '0', '1'};

struct RawRecord {
  std::int64_t ts;
  double value;
};
static_assert(sizeof(RawRecord) == 16);

struct AggHeader {
  char magic[8];
  std::int64_t has_watermark;
  std::int64_t watermark;
  std::int64_t has_head;
  std::int64_t head_ts;
  double head_value;
  std::uint64_t bucket_count;
};

struct AggRecord {
  std::int64_t start;
  double min;
  double max;
  double sum;
  std::uint64_t count;
};
static_assert(sizeof(AggRecord) == 40);

EpochSeconds floor_to(EpochSeconds ts, EpochSeconds width) {
  EpochSeconds q = ts / width;
  if (ts % width != 0 && ts < 0) --q;
  return q * width;
}

bool safe_name(std::string_view s) {
  if (s.empty() || s.size() > 128 || s.front() == '.') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-' || c == '.';
  });
}

[[noreturn]] void io_error(const std::string& what, const fs::path& path) {
  throw Error(ErrorCode::io, what + " " + path.string() + ": " + std::strerror(errno));
}

void sync_file(std::FILE* f, const fs::path& path) {
  if (std::fflush(f) != 0) io_error("flush", path);
  if (::fsync(::fileno(f)) != 0) io_error("fsync", path);
}

void sync_directory(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

void merge_into(Sample& into, const Sample& s) {
  into.min = std::min(into.min, s.min);
  into.max = std::max(into.max, s.max);
  into.sum += s.sum;
  into.count += s.count;
}

}  // namespace

struct Store::Series {
  SeriesKey key;
  mutable std::shared_mutex mu;
  std::vector<Sample> buckets;  // ascending, all below the watermark
  std::vector<Sample> raws;     // ascending, all at or above the watermark
  std::optional<EpochSeconds> watermark;
  std::optional<std::pair<EpochSeconds, double>> head;
  bool raw_file_stale = false;  // raw file still holds archived points
  fs::path raw_path;
  fs::path agg_path;
  std::FILE* raw_file = nullptr;

  ~Series() {
    if (raw_file) std::fclose(raw_file);
  }

  void open_for_append() {
    if (raw_file) std::fclose(raw_file);
    const bool fresh = !fs::exists(raw_path);
    raw_file = std::fopen(raw_path.c_str(), "ab");
    if (!raw_file) io_error("open", raw_path);
    if (fresh) {
      if (std::fwrite(kRawMagic, sizeof kRawMagic, 1, raw_file) != 1) io_error("write", raw_path);
      if (std::fflush(raw_file) != 0) io_error("flush", raw_path);
    }
  }

  void load() {
    if (fs::exists(agg_path)) {
      std::FILE* f = std::fopen(agg_path.c_str(), "rb");
      if (!f) io_error("open", agg_path);
      AggHeader h{};
      const bool ok = std::fread(&h, sizeof h, 1, f) == 1 && std::memcmp(h.magic, kAggMagic, 8) == 0;
      if (!ok) {
        std::fclose(f);
        throw Error(ErrorCode::io, "corrupt bucket file " + agg_path.string());
      }
      if (h.has_watermark) watermark = h.watermark;
      if (h.has_head) head = std::pair{h.head_ts, h.head_value};
      buckets.reserve(h.bucket_count);
      for (std::uint64_t i = 0; i < h.bucket_count; ++i) {
        AggRecord r{};
        if (std::fread(&r, sizeof r, 1, f) != 1) {
          std::fclose(f);
          throw Error(ErrorCode::io, "truncated bucket file " + agg_path.string());
        }
        buckets.push_back(Sample{r.start, r.min, r.max, r.sum, r.count});
      }
      std::fclose(f);
    }
    if (fs::exists(raw_path)) {
      std::FILE* f = std::fopen(raw_path.c_str(), "rb");
      if (!f) io_error("open", raw_path);
      char magic[8];
      if (std::fread(magic, 8, 1, f) != 1 || std::memcmp(magic, kRawMagic, 8) != 0) {
        std::fclose(f);
        throw Error(ErrorCode::io, "corrupt raw file " + raw_path.string());
      }
      RawRecord r{};
      std::uintmax_t complete = sizeof kRawMagic;
      while (std::fread(&r, sizeof r, 1, f) == 1) {
        complete += sizeof r;
        if (watermark && r.ts < *watermark) {
          raw_file_stale = true;
          continue;
        }
        if (!raws.empty() && r.ts <= raws.back().timestamp) continue;
        raws.push_back(Sample::point(r.ts, r.value));
      }
      std::fclose(f);
      // A torn trailing record was never acknowledged.
      if (fs::file_size(raw_path) != complete) fs::resize_file(raw_path, complete);
      if (!raws.empty() && (!head || raws.back().timestamp > head->first)) {
        head = std::pair{raws.back().timestamp, raws.back().sum};
      }
    }
    open_for_append();
  }

  void write_buckets() const {
    fs::path tmp = agg_path;
    tmp += ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) io_error("open", tmp);
    AggHeader h{};
    std::memcpy(h.magic, kAggMagic, 8);
    h.has_watermark = watermark.has_value();
    h.watermark = watermark.value_or(0);
    h.has_head = head.has_value();
    h.head_ts = head ? head->first : 0;
    h.head_value = head ? head->second : 0.0;
    h.bucket_count = buckets.size();
    bool ok = std::fwrite(&h, sizeof h, 1, f) == 1;
    for (const auto& b : buckets) {
      AggRecord r{b.timestamp, b.min, b.max, b.sum, b.count};
      ok = ok && std::fwrite(&r, sizeof r, 1, f) == 1;
    }
    if (!ok) {
      std::fclose(f);
      io_error("write", tmp);
    }
    sync_file(f, tmp);
    std::fclose(f);
    fs::rename(tmp, agg_path);
    sync_directory(agg_path.parent_path());
  }

  void compact_raws() {
    fs::path tmp = raw_path;
    tmp += ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) io_error("open", tmp);
    bool ok = std::fwrite(kRawMagic, sizeof kRawMagic, 1, f) == 1;
    for (const auto& s : raws) {
      RawRecord r{s.timestamp, s.sum};
      ok = ok && std::fwrite(&r, sizeof r, 1, f) == 1;
    }
    if (!ok) {
      std::fclose(f);
      io_error("write", tmp);
    }
    sync_file(f, tmp);
    std::fclose(f);
    if (raw_file) {
      std::fclose(raw_file);
      raw_file = nullptr;
    }
    fs::rename(tmp, raw_path);
    sync_directory(raw_path.parent_path());
    raw_file_stale = false;
    open_for_append();
  }
};

std::string to_string(const SeriesKey& key) {
  return key.station_id + "/" + std::string(to_string(key.kind));
}

SeriesKey parse_series_key(std::string_view text) {
  const auto slash = text.rfind('/');
  if (slash == std::string_view::npos || slash == 0) {
    throw Error(ErrorCode::validation, "series key must be station/sensor: " + std::string(text));
  }
  auto kind = sensor_kind_from_string(text.substr(slash + 1));
  if (!kind) {
    throw Error(ErrorCode::validation, "unknown sensor kind in " + std::string(text));
  }
  return {std::string(text.substr(0, slash)), *kind};
}

void RetentionPolicy::validate() const {
  if (raw_horizon_days < 0) throw Error(ErrorCode::configuration, "raw_horizon_days must be >= 0");
  if (bucket_width <= 0 || kSecondsPerDay % bucket_width != 0) {
    throw Error(ErrorCode::configuration, "bucket_width must divide 24 h evenly");
  }
}

std::string_view to_string(Aggregate a) noexcept {
  switch (a) {
    case Aggregate::raw: return "raw";
    case Aggregate::hourly: return "hourly";
    case Aggregate::daily: return "daily";
  }
  return "unknown";
}

std::optional<Aggregate> aggregate_from_string(std::string_view name) noexcept {
  if (name == "raw") return Aggregate::raw;
  if (name == "hourly") return Aggregate::hourly;
  if (name == "daily") return Aggregate::daily;
  return std::nullopt;
}

Store::Store() = default;

Store::Store(fs::path directory, bool sync) : directory_(std::move(directory)), sync_(sync) {
  std::error_code ec;
  fs::create_directories(*directory_, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + directory_->string() + ": " + ec.message());
  load_existing();
}

Store::~Store() = default;

void Store::load_existing() {
  for (const auto& station_dir : fs::directory_iterator(*directory_)) {
    if (!station_dir.is_directory()) continue;
    const std::string station = station_dir.path().filename().string();
    if (!safe_name(station)) continue;
    for (const auto& file : fs::directory_iterator(station_dir.path())) {
      const auto ext = file.path().extension();
      if (ext != ".raw" && ext != ".agg") continue;
      auto kind = sensor_kind_from_string(file.path().stem().string());
      if (!kind) continue;
      SeriesKey key{station, *kind};
      if (series_.contains(key)) continue;
      auto s = std::make_unique<Series>();
      s->key = key;
      s->raw_path = station_dir.path() / (std::string(to_string(*kind)) + ".raw");
      s->agg_path = station_dir.path() / (std::string(to_string(*kind)) + ".agg");
      s->load();
      series_.emplace(key, std::move(s));
    }
  }
}

Store::Series* Store::find(const SeriesKey& key) const {
  std::shared_lock lock(map_mutex_);
  auto it = series_.find(key);
  return it == series_.end() ? nullptr : it->second.get();
}

Store::Series& Store::find_or_create(const SeriesKey& key) {
  if (Series* s = find(key)) return *s;
  std::unique_lock lock(map_mutex_);
  auto& slot = series_[key];
  if (!slot) {
    auto s = std::make_unique<Series>();
    s->key = key;
    if (directory_) {
      const fs::path dir = *directory_ / key.station_id;
      fs::create_directories(dir);
      s->raw_path = dir / (std::string(to_string(key.kind)) + ".raw");
      s->agg_path = dir / (std::string(to_string(key.kind)) + ".agg");
      s->open_for_append();
    }
    slot = std::move(s);
  }
  return *slot;
}

AppendResult Store::append(const SeriesKey& key, EpochSeconds ts, double value) {
  if (!std::isfinite(value)) throw Error(ErrorCode::validation, "value must be finite");
  if (!safe_name(key.station_id)) {
    throw Error(ErrorCode::validation, "station id \"" + key.station_id + "\" is not storable");
  }
  Series& s = find_or_create(key);
  std::unique_lock lock(s.mu);
  auto same_point = [&](double stored) -> AppendResult {
    if (std::bit_cast<std::uint64_t>(value) == std::bit_cast<std::uint64_t>(stored)) {
      return AppendResult::duplicate;
    }
    throw Error(ErrorCode::conflict, to_string(key) + ": different value already stored at " +
                                         std::to_string(ts));
  };
  if (s.head) {
    if (ts == s.head->first) return same_point(s.head->second);
    if (ts < s.head->first) {
      // A re-sent point still held raw is recognised; anything else is late.
      auto it = std::lower_bound(s.raws.begin(), s.raws.end(), ts,
                                 [](const Sample& a, EpochSeconds t) { return a.timestamp < t; });
      if (it != s.raws.end() && it->timestamp == ts) return same_point(it->sum);
      throw OutOfOrderError(ts, s.head->first);
    }
  }
  if (s.watermark && ts < *s.watermark) throw OutOfOrderError(ts, *s.watermark - 1);
  if (s.raw_file) {
    RawRecord r{ts, value};
    if (std::fwrite(&r, sizeof r, 1, s.raw_file) != 1) io_error("write", s.raw_path);
    if (sync_) {
      sync_file(s.raw_file, s.raw_path);
    } else if (std::fflush(s.raw_file) != 0) {
      io_error("flush", s.raw_path);
    }
  }
  s.raws.push_back(Sample::point(ts, value));
  s.head = std::pair{ts, value};
  return AppendResult::stored;
}

std::vector<Sample> Store::query(const SeriesKey& key, EpochSeconds from, EpochSeconds to,
                                 Aggregate aggregate, std::int32_t utc_offset_s) const {
  if (from > to) throw Error(ErrorCode::validation, "query range has from > to");
  Series* s = find(key);
  if (!s) throw Error(ErrorCode::not_found, "unknown series " + to_string(key));
  std::shared_lock lock(s->mu);

  auto in_range = [&](const std::vector<Sample>& v) {
    auto lo = std::lower_bound(v.begin(), v.end(), from,
                               [](const Sample& a, EpochSeconds t) { return a.timestamp < t; });
    auto hi = std::lower_bound(lo, v.end(), to,
                               [](const Sample& a, EpochSeconds t) { return a.timestamp < t; });
    return std::pair{lo, hi};
  };
  std::vector<Sample> merged;
  auto [blo, bhi] = in_range(s->buckets);
  auto [rlo, rhi] = in_range(s->raws);
  merged.reserve(static_cast<std::size_t>((bhi - blo) + (rhi - rlo)));
  merged.insert(merged.end(), blo, bhi);
  merged.insert(merged.end(), rlo, rhi);
  if (aggregate == Aggregate::raw) return merged;

  const EpochSeconds period = aggregate == Aggregate::hourly ? kSecondsPerHour : kSecondsPerDay;
  const EpochSeconds shift = aggregate == Aggregate::daily ? utc_offset_s : 0;
  std::vector<Sample> out;
  for (const auto& p : merged) {
    const EpochSeconds start = floor_to(p.timestamp + shift, period) - shift;
    if (!out.empty() && out.back().timestamp == start) {
      merge_into(out.back(), p);
    } else {
      Sample b = p;
      b.timestamp = start;
      out.push_back(b);
    }
  }
  return out;
}

std::size_t Store::downsample(const SeriesKey& key, const RetentionPolicy& policy, EpochSeconds now,
                              ArchiveStop stop) {
  policy.validate();
  Series* s = find(key);
  if (!s) throw Error(ErrorCode::not_found, "unknown series " + to_string(key));
  std::unique_lock lock(s->mu);

  EpochSeconds cutoff =
      floor_to(now - static_cast<EpochSeconds>(policy.raw_horizon_days) * kSecondsPerDay,
               policy.bucket_width);
  std::size_t archived = 0;
  if (!s->watermark || cutoff > *s->watermark) {
    const EpochSeconds floor_start = s->watermark.value_or(std::numeric_limits<EpochSeconds>::min());
    auto end = std::lower_bound(s->raws.begin(), s->raws.end(), cutoff,
                                [](const Sample& a, EpochSeconds t) { return a.timestamp < t; });
    for (auto it = s->raws.begin(); it != end; ++it) {
      const EpochSeconds start = std::max(floor_to(it->timestamp, policy.bucket_width), floor_start);
      if (!s->buckets.empty() && s->buckets.back().timestamp == start) {
        merge_into(s->buckets.back(), *it);
      } else {
        Sample b = *it;
        b.timestamp = start;
        s->buckets.push_back(b);
      }
      ++archived;
    }
    s->raws.erase(s->raws.begin(), end);
    s->watermark = cutoff;
    if (directory_) {
      s->write_buckets();
      if (archived > 0) s->raw_file_stale = true;
    }
  }
  if (stop == ArchiveStop::complete && directory_ && s->raw_file_stale) s->compact_raws();
  return archived;
}

std::size_t Store::downsample_all(const RetentionPolicy& policy, EpochSeconds now) {
  std::size_t total = 0;
  for (const auto& key : keys()) total += downsample(key, policy, now);
  return total;
}

bool Store::contains(const SeriesKey& key) const { return find(key) != nullptr; }

std::vector<SeriesKey> Store::keys() const {
  std::shared_lock lock(map_mutex_);
  std::vector<SeriesKey> out;
  out.reserve(series_.size());
  for (const auto& [k, _] : series_) out.push_back(k);
  return out;
}

std::vector<SeriesKey> Store::keys_for_station(const std::string& station_id) const {
  std::shared_lock lock(map_mutex_);
  std::vector<SeriesKey> out;
  for (auto it = series_.lower_bound(SeriesKey{station_id, kAllSensorKinds.front()});
       it != series_.end() && it->first.station_id == station_id; ++it) {
    out.push_back(it->first);
  }
  return out;
}

SeriesInfo Store::info(const SeriesKey& key) const {
  Series* s = find(key);
  if (!s) throw Error(ErrorCode::not_found, "unknown series " + to_string(key));
  std::shared_lock lock(s->mu);
  SeriesInfo i;
  i.raw_points = s->raws.size();
  i.buckets = s->buckets.size();
  i.watermark = s->watermark;
  if (s->head) i.last_timestamp = s->head->first;
  return i;
}

std::string export_report(const Store& store, std::span<const SeriesKey> keys, EpochSeconds from,
                          EpochSeconds to, Aggregate aggregate) {
  if (keys.empty()) throw Error(ErrorCode::validation, "report needs at least one series");
  std::map<EpochSeconds, std::vector<std::optional<double>>> rows;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (const auto& p : store.query(keys[i], from, to, aggregate)) {
      auto& row = rows[p.timestamp];
      row.resize(keys.size());
      row[i] = p.mean();
    }
  }
  std::string out;
  std::vector<std::string> fields{"timestamp"};
  for (const auto& k : keys) fields.push_back(to_string(k));
  csv::append_row(out, fields);
  for (auto& [ts, values] : rows) {
    values.resize(keys.size());
    fields.assign(1, to_iso_utc(ts));
    for (const auto& v : values) fields.push_back(v ? wire::format_number(*v) : std::string());
    csv::append_row(out, fields);
  }
  return out;
}

}  // namespace vinesense::store
