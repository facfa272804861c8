#include "cryptofactor/calendar.hpp"

#include <charconv>
#include <cstdio>

namespace cryptofactor {

namespace {

// Civil <-> day-count conversions, valid for all Gregorian dates.
int days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(int z, int& y, int& m, int& d) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int yr = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = yr + (m <= 2);
}

bool parse_int(std::string_view s, int& out) {
  auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

}  // namespace

Date make_date(int year, int month, int day) {
  return Date{days_from_civil(year, month, day)};
}

void civil_of(Date d, int& year, int& month, int& day) {
  civil_from_days(d.days, year, month, day);
}

bool try_parse_date(std::string_view s, Date& out) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  int y, m, d;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m) ||
      !parse_int(s.substr(8, 2), d))
    return false;
  if (m < 1 || m > 12 || d < 1 || d > 31) return false;
  Date candidate = make_date(y, m, d);
  int y2, m2, d2;
  civil_of(candidate, y2, m2, d2);
  if (y2 != y || m2 != m || d2 != d) return false;  // e.g. Feb 30
  out = candidate;
  return true;
}

std::string to_string(Date d) {
  int y, m, day;
  civil_of(d, y, m, day);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, day);
  return buf;
}

int weekday(Date d) {
  // 1970-01-01 was a Thursday.
  int w = (d.days + 4) % 7;
  return w < 0 ? w + 7 : w;
}

Date week_start(Date d, int anchor_weekday) {
  int delta = (weekday(d) - anchor_weekday + 7) % 7;
  return d - delta;
}

YearMonth ym_of(Date d) {
  int y, m, day;
  civil_of(d, y, m, day);
  return YearMonth{y, m};
}

YearMonth prev_month(YearMonth m) {
  if (m.month == 1) return YearMonth{m.year - 1, 12};
  return YearMonth{m.year, m.month - 1};
}

YearMonth next_month(YearMonth m) {
  if (m.month == 12) return YearMonth{m.year + 1, 1};
  return YearMonth{m.year, m.month + 1};
}

Date month_first(YearMonth m) { return make_date(m.year, m.month, 1); }

Date month_last(YearMonth m) {
  return month_first(next_month(m)) - 1;
}

std::string to_string(YearMonth m) {
  char buf[12];
  std::snprintf(buf, sizeof buf, "%04d-%02d", m.year, m.month);
  return buf;
}

bool try_parse_ym(std::string_view s, YearMonth& out) {
  if (s.size() != 7 || s[4] != '-') return false;
  int y, m;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m)) return false;
  if (m < 1 || m > 12) return false;
  out = YearMonth{y, m};
  return true;
}

}  // namespace cryptofactor
