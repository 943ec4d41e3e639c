// ctxrnnt/context/datetime.h

#ifndef CTXRNNT_CONTEXT_DATETIME_H_
#define CTXRNNT_CONTEXT_DATETIME_H_

#include <string>
#include <string_view>

namespace ctxrnnt {

// Calendar fields used as time context. weekday is Monday = 0 .. Sunday = 6;
// week_no is the ISO-8601 week (1..53).
struct DateTimeContext {
  int hour = 0;
  int weekday = 0;
  int week_no = 1;
  int month = 1;

  bool operator==(const DateTimeContext&) const = default;
};

// Accepts "YYYY-MM-DDTHH:MM[:SS]" and the spaced "YYYY-MM-DD T HH:MM" form.
// Throws ValidationError on malformed input or an impossible date.
DateTimeContext parse_datetime(std::string_view iso);

const char* month_name(int month);    // 1..12
const char* weekday_name(int weekday);  // 0..6, Monday first

}  // namespace ctxrnnt

#endif  // CTXRNNT_CONTEXT_DATETIME_H_
