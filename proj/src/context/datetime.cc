#include "ctxrnnt/context/datetime.h"

#include <cctype>
#include <chrono>

#include "ctxrnnt/error.h"

namespace ctxrnnt {

namespace {

int read_digits(std::string_view s, std::size_t& pos, std::size_t count,
                std::string_view whole) {
  if (pos + count > s.size()) {
    throw ValidationError("malformed timestamp '" + std::string(whole) + "'");
  }
  int v = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw ValidationError("malformed timestamp '" + std::string(whole) + "'");
    }
    v = v * 10 + (c - '0');
  }
  pos += count;
  return v;
}

void expect(std::string_view s, std::size_t& pos, char c, std::string_view whole) {
  if (pos >= s.size() || s[pos] != c) {
    throw ValidationError("malformed timestamp '" + std::string(whole) + "'");
  }
  ++pos;
}

}  // namespace

DateTimeContext parse_datetime(std::string_view iso) {
  using namespace std::chrono;
  std::size_t pos = 0;
  const int y = read_digits(iso, pos, 4, iso);
  expect(iso, pos, '-', iso);
  const int mo = read_digits(iso, pos, 2, iso);
  expect(iso, pos, '-', iso);
  const int d = read_digits(iso, pos, 2, iso);
  while (pos < iso.size() && iso[pos] == ' ') ++pos;
  expect(iso, pos, 'T', iso);
  while (pos < iso.size() && iso[pos] == ' ') ++pos;
  const int hh = read_digits(iso, pos, 2, iso);
  expect(iso, pos, ':', iso);
  const int mm = read_digits(iso, pos, 2, iso);
  if (pos < iso.size()) {
    expect(iso, pos, ':', iso);
    const int ss = read_digits(iso, pos, 2, iso);
    if (ss > 59) throw ValidationError("seconds out of range in '" + std::string(iso) + "'");
  }
  if (pos != iso.size()) {
    throw ValidationError("trailing characters in timestamp '" + std::string(iso) + "'");
  }
  if (hh > 23 || mm > 59) {
    throw ValidationError("time of day out of range in '" + std::string(iso) + "'");
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw ValidationError("invalid calendar date in '" + std::string(iso) + "'");

  const sys_days date{ymd};
  const unsigned iso_day = weekday{date}.iso_encoding();  // Monday = 1
  // The ISO week belongs to the year containing its Thursday.
  const sys_days thursday = date + days{4 - static_cast<int>(iso_day)};
  const year iso_year = year_month_day{thursday}.year();
  const sys_days jan1{iso_year / January / 1};
  const int week = static_cast<int>((thursday - jan1).count() / 7 + 1);

  DateTimeContext ctx;
  ctx.hour = hh;
  ctx.weekday = static_cast<int>(iso_day) - 1;
  ctx.week_no = week;
  ctx.month = mo;
  return ctx;
}

const char* month_name(int month) {
  static const char* kNames[] = {"January", "February", "March",     "April",
                                 "May",     "June",     "July",      "August",
                                 "September", "October", "November", "December"};
  if (month < 1 || month > 12) throw ValidationError("month out of range");
  return kNames[month - 1];
}

const char* weekday_name(int weekday) {
  static const char* kNames[] = {"Monday", "Tuesday", "Wednesday", "Thursday",
                                 "Friday", "Saturday", "Sunday"};
  if (weekday < 0 || weekday > 6) throw ValidationError("weekday out of range");
  return kNames[weekday];
}

}  // namespace ctxrnnt
