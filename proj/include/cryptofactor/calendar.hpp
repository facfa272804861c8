#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace cryptofactor {

// Calendar date stored as days since 1970-01-01. All dates are UTC civil
// dates; there is no intraday time anywhere in the pipeline.
struct Date {
  int days = 0;
  auto operator<=>(const Date&) const = default;
};

inline Date operator+(Date d, int n) { return Date{d.days + n}; }
inline Date operator-(Date d, int n) { return Date{d.days - n}; }
inline int operator-(Date a, Date b) { return a.days - b.days; }

Date make_date(int year, int month, int day);
void civil_of(Date d, int& year, int& month, int& day);

// "YYYY-MM-DD". try_parse returns false on malformed input.
bool try_parse_date(std::string_view s, Date& out);
std::string to_string(Date d);

// 0 = Sunday ... 6 = Saturday.
int weekday(Date d);

// Latest date <= d whose weekday equals anchor_weekday.
Date week_start(Date d, int anchor_weekday);

struct YearMonth {
  int year = 1970;
  int month = 1;  // 1..12
  auto operator<=>(const YearMonth&) const = default;
};

YearMonth ym_of(Date d);
YearMonth prev_month(YearMonth m);
YearMonth next_month(YearMonth m);
Date month_first(YearMonth m);
Date month_last(YearMonth m);

// "YYYY-MM".
std::string to_string(YearMonth m);
bool try_parse_ym(std::string_view s, YearMonth& out);

}  // namespace cryptofactor
