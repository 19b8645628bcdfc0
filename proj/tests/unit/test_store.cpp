#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <random>

#include "support.hpp"
#include "vinesense/csv.hpp"
#include "vinesense/error.hpp"
#include "vinesense/store.hpp"

using namespace vinesense;
using namespace vinesense::store;
using vinesense::testing::TempDir;

namespace {

const SeriesKey kTemp{"north", SensorKind::temperature};

struct Point {
  EpochSeconds ts;
  double value;
};

std::vector<Point> random_series(std::uint64_t seed, int n, EpochSeconds start = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v(-20, 45);
  std::uniform_int_distribution<int> step(1, 1800);
  std::vector<Point> out;
  EpochSeconds ts = start;
  for (int i = 0; i < n; ++i) {
    ts += step(rng);
    out.push_back({ts, v(rng)});
  }
  return out;
}

void fill(Store& s, const SeriesKey& key, const std::vector<Point>& pts) {
  for (const auto& p : pts) s.append(key, p.ts, p.value);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::io;
}

}  // namespace

TEST(Store, AppendAndQuery) {
  Store s;
  EXPECT_EQ(s.append(kTemp, 100, 1.5), AppendResult::stored);
  const auto q = s.query(kTemp, 0, 1000);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0], Sample::point(100, 1.5));
  EXPECT_TRUE(s.query(kTemp, 50, 50).empty());
  EXPECT_TRUE(s.query(kTemp, 101, 1000).empty());
}

TEST(Store, OrderingDuplicatesAndConflicts) {
  Store s;
  s.append(kTemp, 100, 1.0);
  s.append(kTemp, 200, 2.0);
  EXPECT_EQ(s.append(kTemp, 200, 2.0), AppendResult::duplicate);
  EXPECT_EQ(s.append(kTemp, 100, 1.0), AppendResult::duplicate);
  EXPECT_EQ(code_of([&] { s.append(kTemp, 200, 3.0); }), ErrorCode::conflict);
  try {
    s.append(kTemp, 150, 1.0);
    FAIL();
  } catch (const OutOfOrderError& e) {
    EXPECT_EQ(e.last_timestamp(), 200);
    EXPECT_EQ(e.rejected_timestamp(), 150);
  }
  EXPECT_EQ(s.query(kTemp, 0, 1000).size(), 2u);
}

TEST(Store, RejectsBadInput) {
  Store s;
  EXPECT_EQ(code_of([&] { s.append(kTemp, 1, NAN); }), ErrorCode::validation);
  EXPECT_EQ(code_of([&] { s.append({"../etc", SensorKind::rain}, 1, 1); }), ErrorCode::validation);
  EXPECT_EQ(code_of([&] { s.query({"ghost", SensorKind::rain}, 0, 1); }), ErrorCode::not_found);
  s.append(kTemp, 1, 1);
  EXPECT_EQ(code_of([&] { s.query(kTemp, 5, 1); }), ErrorCode::validation);
}

TEST(Store, SeriesKeyText) {
  EXPECT_EQ(to_string(kTemp), "north/temperature");
  EXPECT_EQ(parse_series_key("north/temperature"), kTemp);
  EXPECT_THROW(parse_series_key("north"), Error);
  EXPECT_THROW(parse_series_key("north/snow"), Error);
}

TEST(Store, BucketSummaries) {
  Store s;
  s.append(kTemp, 0, 1);
  s.append(kTemp, 900, 5);
  s.append(kTemp, 1800, 3);
  RetentionPolicy p{0, kSecondsPerHour};
  EXPECT_EQ(s.downsample(kTemp, p, 4000), 3u);
  const auto q = s.query(kTemp, 0, 4000);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0].min, 1);
  EXPECT_EQ(q[0].max, 5);
  EXPECT_EQ(q[0].mean(), 3);
  EXPECT_EQ(q[0].count, 3u);
  EXPECT_EQ(s.downsample(kTemp, p, 4000), 0u);
}

TEST(Store, NothingOlderThanHorizon) {
  Store s;
  fill(s, kTemp, random_series(1, 50, 10 * kSecondsPerDay));
  EXPECT_EQ(s.downsample(kTemp, RetentionPolicy{90, kSecondsPerHour}, 11 * kSecondsPerDay), 0u);
}

TEST(Store, DailyAggregateMatchesBruteForce) {
  Store s;
  std::vector<double> values;
  const EpochSeconds offset = -7 * 3600;
  const EpochSeconds start = local_midnight(make_date(2025, 6, 1), offset);
  for (int i = 0; i < kTicksPerDay; ++i) {
    const double v = std::sin(i * 0.3) * 10 + 15;
    values.push_back(v);
    s.append(kTemp, start + i * kTickSeconds, v);
  }
  const auto q = s.query(kTemp, start, start + kSecondsPerDay, Aggregate::daily, offset);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0].timestamp, start);
  EXPECT_EQ(q[0].min, *std::min_element(values.begin(), values.end()));
  EXPECT_EQ(q[0].max, *std::max_element(values.begin(), values.end()));
  double sum = 0;
  for (double v : values) sum += v;
  EXPECT_NEAR(q[0].mean(), sum / kTicksPerDay, 1e-12);
}

TEST(Store, DownsamplingPreservesExtremesAndCounts) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Store s;
    const auto pts = random_series(seed, 2000);
    fill(s, kTemp, pts);
    const EpochSeconds end = pts.back().ts + 1;
    const RetentionPolicy p{0, seed % 2 ? kSecondsPerHour : 3 * kSecondsPerHour};
    const EpochSeconds now = pts[pts.size() / 2].ts;
    const auto archived = s.downsample(kTemp, p, now);
    std::size_t below = 0;
    for (const auto& pt : pts) below += pt.ts < (now / p.bucket_width) * p.bucket_width;
    EXPECT_EQ(archived, below);

    std::uint64_t total = 0;
    for (const auto& b : s.query(kTemp, 0, end)) total += b.count;
    EXPECT_EQ(total, pts.size());

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<EpochSeconds> pick(0, end / kSecondsPerHour);
    for (int trial = 0; trial < 50; ++trial) {
      EpochSeconds a = pick(rng) * kSecondsPerHour, b = pick(rng) * kSecondsPerHour;
      if (a > b) std::swap(a, b);
      b += 3 * kSecondsPerHour;
      // Align to the archive granularity so every bucket lies wholly inside.
      a = a / p.bucket_width * p.bucket_width;
      b = b / p.bucket_width * p.bucket_width;
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& pt : pts) {
        if (pt.ts >= a && pt.ts < b) {
          lo = std::min(lo, pt.value);
          hi = std::max(hi, pt.value);
        }
      }
      double qlo = INFINITY, qhi = -INFINITY;
      for (const auto& smp : s.query(kTemp, a, b, Aggregate::hourly)) {
        qlo = std::min(qlo, smp.min);
        qhi = std::max(qhi, smp.max);
      }
      ASSERT_EQ(qlo, lo);
      ASSERT_EQ(qhi, hi);
    }
    EXPECT_EQ(s.downsample(kTemp, p, now), 0u);
  }
}

TEST(Store, RawAndArchivedBoundaryIsSeamless) {
  Store s;
  for (int i = 0; i < 48; ++i) s.append(kTemp, i * kTickSeconds, i);
  s.downsample(kTemp, RetentionPolicy{0, kSecondsPerHour}, 6 * kSecondsPerHour);
  const auto q = s.query(kTemp, 0, 12 * kSecondsPerHour);
  ASSERT_EQ(q.size(), 6u + 24u);
  for (std::size_t i = 1; i < q.size(); ++i) EXPECT_LT(q[i - 1].timestamp, q[i].timestamp);
  EXPECT_EQ(q[5].timestamp, 5 * kSecondsPerHour);
  EXPECT_EQ(q[6].timestamp, 6 * kSecondsPerHour);
  EXPECT_TRUE(q[6].is_raw());
  // Archived range is closed to late points.
  EXPECT_EQ(code_of([&] { s.append({"north", SensorKind::temperature}, 100, 5); }), ErrorCode::out_of_order);
}

TEST(Store, RoundTripIsBitExactOnDisk) {
  TempDir dir;
  const auto pts = random_series(3, 500);
  {
    Store s(dir.path());
    fill(s, kTemp, pts);
    s.append({"north", SensorKind::rain}, 5, 0.1);
  }
  Store s(dir.path());
  const auto q = s.query(kTemp, 0, pts.back().ts + 1);
  ASSERT_EQ(q.size(), pts.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    ASSERT_EQ(q[i].timestamp, pts[i].ts);
    ASSERT_EQ(std::memcmp(&q[i].sum, &pts[i].value, sizeof(double)), 0);
  }
  EXPECT_EQ(s.keys().size(), 2u);
  EXPECT_EQ(s.keys_for_station("north").size(), 2u);
  EXPECT_EQ(s.append(kTemp, pts.back().ts, pts.back().value), AppendResult::duplicate);
}

TEST(Store, CrashBetweenBucketsAndCompactionConverges) {
  TempDir crashed_dir, clean_dir;
  const auto pts = random_series(4, 1000);
  const EpochSeconds now = pts[600].ts;
  const RetentionPolicy p{0, kSecondsPerHour};
  const EpochSeconds end = pts.back().ts + 1;
  std::vector<Sample> expected;
  {
    Store clean(clean_dir.path());
    fill(clean, kTemp, pts);
    clean.downsample(kTemp, p, now);
    expected = clean.query(kTemp, 0, end);
  }
  {
    Store s(crashed_dir.path());
    fill(s, kTemp, pts);
    s.downsample(kTemp, p, now, ArchiveStop::buckets_only);
  }
  {
    Store reopened(crashed_dir.path());
    EXPECT_EQ(reopened.query(kTemp, 0, end), expected);
    EXPECT_EQ(reopened.downsample(kTemp, p, now), 0u);
    EXPECT_EQ(reopened.query(kTemp, 0, end), expected);
  }
  Store again(crashed_dir.path());
  EXPECT_EQ(again.query(kTemp, 0, end), expected);
  Store clean(clean_dir.path());
  EXPECT_EQ(clean.query(kTemp, 0, end), expected);
  EXPECT_EQ(again.info(kTemp).raw_points, clean.info(kTemp).raw_points);
}

TEST(Store, RetentionValidation) {
  EXPECT_THROW((RetentionPolicy{-1, kSecondsPerHour}.validate()), Error);
  EXPECT_THROW((RetentionPolicy{1, 7000}.validate()), Error);
  EXPECT_NO_THROW((RetentionPolicy{1, 1800}.validate()));
}

TEST(Report, UnionOfTimestampsWithEmpties) {
  Store s;
  const SeriesKey rain{"north", SensorKind::rain};
  s.append(kTemp, 0, 10);
  s.append(kTemp, 900, 11);
  s.append(kTemp, 1800, 12);
  const std::vector<SeriesKey> one{kTemp};
  const auto single = export_report(s, one, 0, 3600);
  EXPECT_EQ(std::count(single.begin(), single.end(), '\n'), 4);
  EXPECT_EQ(single.substr(0, single.find('\r')), "timestamp,north/temperature");

  s.append(rain, 450, 0.2);
  const std::vector<SeriesKey> both{kTemp, rain};
  const auto text = export_report(s, both, 0, 3600);
  const auto rows = csv::parse(text);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[1], (std::vector<std::string>{"1970-01-01T00:00:00Z", "10", ""}));
  EXPECT_EQ(rows[2], (std::vector<std::string>{"1970-01-01T00:07:30Z", "", "0.2"}));
  EXPECT_EQ(export_report(s, both, 0, 3600), text);
  const auto hourly = csv::parse(export_report(s, both, 0, 3600, Aggregate::hourly));
  ASSERT_EQ(hourly.size(), 2u);
  EXPECT_EQ(hourly[1][1], "11");
}
