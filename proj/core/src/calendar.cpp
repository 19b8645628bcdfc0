#include "vinesense/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "vinesense/error.hpp"

namespace vinesense {

namespace chr = std::chrono;

Date make_date(int year, unsigned month, unsigned day) {
  Date d{chr::year{year}, chr::month{month}, chr::day{day}};
  if (!d.ok()) {
    throw Error(ErrorCode::validation, "invalid calendar date");
  }
  return d;
}

std::int64_t day_number(const Date& date) {
  return chr::sys_days{date}.time_since_epoch().count();
}

Date date_from_day_number(std::int64_t days) {
  return Date{chr::sys_days{chr::days{days}}};
}

Date add_days(const Date& date, std::int64_t days) {
  return date_from_day_number(day_number(date) + days);
}

std::int64_t days_between(const Date& from, const Date& to) {
  return day_number(to) - day_number(from);
}

int day_of_year(const Date& date) {
  Date jan1{date.year(), chr::January, chr::day{1}};
  return static_cast<int>(days_between(jan1, date)) + 1;
}

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Date local_date(EpochSeconds ts, std::int32_t utc_offset_s) {
  return date_from_day_number(floor_div(ts + utc_offset_s, kSecondsPerDay));
}

EpochSeconds local_midnight(const Date& date, std::int32_t utc_offset_s) {
  return day_number(date) * kSecondsPerDay - utc_offset_s;
}

std::string to_iso(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::string to_iso_utc(EpochSeconds ts) {
  const std::int64_t days = floor_div(ts, kSecondsPerDay);
  const std::int64_t rem = ts - days * kSecondsPerDay;
  const Date d = date_from_day_number(days);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", to_iso(d).c_str(),
                static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                static_cast<int>(rem % 60));
  return buf;
}

namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos + len > text.size()) {
    throw Error(ErrorCode::validation, "truncated date/time: " + std::string(text));
  }
  int value = 0;
  auto res = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (res.ec != std::errc{} || res.ptr != text.data() + pos + len) {
    throw Error(ErrorCode::validation, "malformed date/time: " + std::string(text));
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw Error(ErrorCode::validation, "malformed date/time: " + std::string(text));
  }
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10) {
    throw Error(ErrorCode::validation, "expected YYYY-MM-DD: " + std::string(text));
  }
  expect_char(text, 4, '-');
  expect_char(text, 7, '-');
  return make_date(parse_fixed(text, 0, 4), static_cast<unsigned>(parse_fixed(text, 5, 2)),
                   static_cast<unsigned>(parse_fixed(text, 8, 2)));
}

EpochSeconds parse_timestamp(std::string_view text) {
  if (!text.empty() && text.find('-') == std::string_view::npos) {
    EpochSeconds v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
      throw Error(ErrorCode::validation, "malformed timestamp: " + std::string(text));
    }
    return v;
  }
  const Date d = parse_date(text.substr(0, std::min<std::size_t>(10, text.size())));
  EpochSeconds ts = day_number(d) * kSecondsPerDay;
  if (text.size() == 10) return ts;
  expect_char(text, 10, 'T');
  const int hh = parse_fixed(text, 11, 2);
  expect_char(text, 13, ':');
  const int mm = parse_fixed(text, 14, 2);
  int ss = 0;
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    ss = parse_fixed(text, 17, 2);
    pos = 19;
  }
  expect_char(text, pos, 'Z');
  if (pos + 1 != text.size() || hh > 23 || mm > 59 || ss > 59) {
    throw Error(ErrorCode::validation, "malformed timestamp: " + std::string(text));
  }
  return ts + hh * 3600 + mm * 60 + ss;
}

}  // namespace vinesense
