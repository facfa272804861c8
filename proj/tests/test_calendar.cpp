#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cryptofactor/calendar.hpp"

using namespace cryptofactor;

TEST_CASE("epoch and civil round trip") {
  CHECK(make_date(1970, 1, 1).days == 0);
  CHECK(make_date(1970, 1, 2).days == 1);

  int y, m, d;
  civil_of(make_date(2020, 2, 29), y, m, d);
  CHECK(y == 2020);
  CHECK(m == 2);
  CHECK(d == 29);

  for (int days : {-400, 0, 1, 10000, 18993, 20000}) {
    civil_of(Date{days}, y, m, d);
    CHECK(make_date(y, m, d).days == days);
  }
}

TEST_CASE("date parsing") {
  Date d;
  REQUIRE(try_parse_date("2021-01-05", d));
  CHECK(d == make_date(2021, 1, 5));
  CHECK(to_string(d) == "2021-01-05");

  CHECK_FALSE(try_parse_date("2021-02-30", d));
  CHECK_FALSE(try_parse_date("2021-1-5", d));
  CHECK_FALSE(try_parse_date("garbage", d));
  CHECK_FALSE(try_parse_date("", d));
  CHECK_FALSE(try_parse_date("2021/01/05", d));
}

TEST_CASE("weekday and week start") {
  CHECK(weekday(make_date(1970, 1, 1)) == 4);  // Thursday
  CHECK(weekday(make_date(2021, 1, 4)) == 1);  // Monday
  CHECK(weekday(make_date(2021, 1, 3)) == 0);  // Sunday

  const int monday = 1;
  CHECK(week_start(make_date(2021, 1, 6), monday) == make_date(2021, 1, 4));
  CHECK(week_start(make_date(2021, 1, 4), monday) == make_date(2021, 1, 4));
  CHECK(week_start(make_date(2021, 1, 10), monday) == make_date(2021, 1, 4));
  CHECK(week_start(make_date(2021, 1, 11), monday) == make_date(2021, 1, 11));
}

TEST_CASE("year-month arithmetic") {
  CHECK(ym_of(make_date(2021, 3, 31)) == YearMonth{2021, 3});
  CHECK(prev_month(YearMonth{2021, 1}) == YearMonth{2020, 12});
  CHECK(next_month(YearMonth{2020, 12}) == YearMonth{2021, 1});
  CHECK(month_first(YearMonth{2021, 2}) == make_date(2021, 2, 1));
  CHECK(month_last(YearMonth{2021, 2}) == make_date(2021, 2, 28));
  CHECK(month_last(YearMonth{2020, 2}) == make_date(2020, 2, 29));
  CHECK(to_string(YearMonth{2021, 3}) == "2021-03");

  YearMonth m;
  REQUIRE(try_parse_ym("2021-03", m));
  CHECK(m == YearMonth{2021, 3});
  CHECK_FALSE(try_parse_ym("2021-13", m));
  CHECK_FALSE(try_parse_ym("2021-3", m));
}
