#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cryptofactor/factors.hpp"
#include "cryptofactor/rng.hpp"
#include "helpers.hpp"

using namespace cryptofactor;

namespace {

const Date kPrev = make_date(2021, 3, 7);  // Sunday: formation day
const Date kDay = make_date(2021, 3, 8);   // Monday

// One coin with a cap on the formation day and a return on the next day.
void add_coin(PriceTable& prices, ReturnTable& returns, UniverseSeries& uni,
              const std::string& id, double cap, double ret) {
  const double close0 = 100.0;
  prices.coins[id] = testutil::make_series(
      {CoinDay{kPrev, close0, cap * 0.05, cap},
       CoinDay{kDay, close0 * (1.0 + ret), cap * 0.05, cap}});
  returns[id] = {ReturnObs{kDay, kPrev, ret, ret}};
  uni.days[kPrev].push_back(id);
  uni.days[kDay].push_back(id);
}

void sort_universe(UniverseSeries& uni) {
  for (auto& [d, members] : uni.days) std::sort(members.begin(), members.end());
}

RateSeries zero_rate(Date from) {
  RateSeries rf;
  rf.add(from, 0.0);
  rf.finalize();
  return rf;
}

}  // namespace

TEST_CASE("market factor is the cap-weighted mean excess return") {
  PriceTable prices;
  ReturnTable returns;
  UniverseSeries uni;
  add_coin(prices, returns, uni, "a", 100, 0.02);
  add_coin(prices, returns, uni, "b", 300, -0.01);
  sort_universe(uni);
  RateSeries rf = zero_rate(kPrev);

  auto series = market_factor(returns, uni, prices, rf, nullptr);
  REQUIRE(!series.empty());
  // weights 0.25/0.75: 0.25*0.02 + 0.75*(-0.01) = -0.0025
  auto it = std::find_if(series.begin(), series.end(),
                         [](const auto& p) { return p.first == kDay; });
  REQUIRE(it != series.end());
  CHECK(it->second == doctest::Approx(-0.0025).epsilon(1e-14));
}

TEST_CASE("market factor: single coin and uniform-return cases") {
  {
    PriceTable prices;
    ReturnTable returns;
    UniverseSeries uni;
    add_coin(prices, returns, uni, "solo", 500, 0.034);
    RateSeries rf = zero_rate(kPrev);
    auto series = market_factor(returns, uni, prices, rf, nullptr);
    auto it = std::find_if(series.begin(), series.end(),
                           [](const auto& p) { return p.first == kDay; });
    REQUIRE(it != series.end());
    CHECK(it->second == doctest::Approx(0.034).epsilon(1e-14));
  }
  {
    PriceTable prices;
    ReturnTable returns;
    UniverseSeries uni;
    for (int i = 0; i < 5; ++i) {
      add_coin(prices, returns, uni, "c" + std::to_string(i), 100.0 + 50 * i,
               0.015);
    }
    sort_universe(uni);
    RateSeries rf;
    rf.add(kPrev, 0.0365);  // rf_daily = 0.0001
    rf.finalize();
    auto series = market_factor(returns, uni, prices, rf, nullptr);
    auto it = std::find_if(series.begin(), series.end(),
                           [](const auto& p) { return p.first == kDay; });
    REQUIRE(it != series.end());
    CHECK(it->second == doctest::Approx(0.015 - 0.0001).epsilon(1e-12));
  }
}

TEST_CASE("market factor skips days with no usable universe") {
  PriceTable prices;
  ReturnTable returns;
  UniverseSeries uni;
  uni.days[kDay] = {"ghost"};  // no returns, no caps
  RateSeries rf = zero_rate(kPrev);
  StageLog log;
  auto series = market_factor(returns, uni, prices, rf, &log);
  CHECK(series.empty());
  CHECK(log.count(Errc::empty_universe) == 1);
}

namespace {

// A universe of n coins present for >= 5 weeks with strictly increasing caps
// and per-coin constant daily returns, so momentum ranks are known.
struct SortFixture {
  PriceTable prices;
  ReturnTable returns;
  UniverseSeries universe;
  Date week;  // a Monday with full trailing history
};

SortFixture make_sort_fixture(int n_coins, double cap_of_rank_step = 1e6,
                              bool equal_caps = false) {
  SortFixture f;
  const Date start = make_date(2021, 1, 1);
  const int days = 70;
  for (int c = 0; c < n_coins; ++c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "c%02d", c);
    const std::string id =
        std::string(buf);
    const double cap =
        equal_caps ? 5e6 : 5e6 + cap_of_rank_step * c;  // rank = index
    const double daily_ret = 0.001 * (c + 1);           // momentum rank = index
    CoinSeries s;
    double close = 100.0;
    for (int d = 0; d < days; ++d) {
      s.days.push_back(CoinDay{start + d, close, cap * 0.05, cap});
      close *= 1.0 + daily_ret;
    }
    f.prices.coins[id] = s;
    std::vector<ReturnObs> obs;
    for (int d = 1; d < days; ++d) {
      obs.push_back(ReturnObs{start + d, start + d - 1, daily_ret, daily_ret});
    }
    f.returns[id] = obs;
    for (int d = 0; d < days; ++d) f.universe.days[start + d].push_back(id);
  }
  for (auto& [d, m] : f.universe.days) std::sort(m.begin(), m.end());
  f.week = week_start(start + 40, 1);
  return f;
}

const WeeklySort* find_week(const std::vector<WeeklySort>& sorts, Date w) {
  for (const auto& s : sorts) {
    if (s.week_start == w) return &s;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("weekly sorts split 10 coins 3/4/3 by cap rank") {
  SortFixture f = make_sort_fixture(10);
  auto sorts = weekly_sorts(f.returns, f.prices, f.universe, {}, nullptr);
  const WeeklySort* w = find_week(sorts, f.week);
  REQUIRE(w != nullptr);

  int small = 0, middle = 0, big = 0;
  for (const auto& [coin, g] : w->size_groups) {
    if (g == SizeGroup::Small) ++small;
    if (g == SizeGroup::Middle) ++middle;
    if (g == SizeGroup::Big) ++big;
  }
  CHECK(small == 3);
  CHECK(middle == 4);
  CHECK(big == 3);
  // caps increase with index, so c00..c02 are Small and c07..c09 Big
  CHECK(w->size_groups.at("c00") == SizeGroup::Small);
  CHECK(w->size_groups.at("c02") == SizeGroup::Small);
  CHECK(w->size_groups.at("c03") == SizeGroup::Middle);
  CHECK(w->size_groups.at("c07") == SizeGroup::Big);
  CHECK(w->size_groups.at("c09") == SizeGroup::Big);
}

TEST_CASE("equal caps break ties lexicographically") {
  SortFixture f = make_sort_fixture(10, 0.0, /*equal_caps=*/true);
  auto sorts = weekly_sorts(f.returns, f.prices, f.universe, {}, nullptr);
  const WeeklySort* w = find_week(sorts, f.week);
  REQUIRE(w != nullptr);
  CHECK(w->size_groups.at("c00") == SizeGroup::Small);
  CHECK(w->size_groups.at("c01") == SizeGroup::Small);
  CHECK(w->size_groups.at("c02") == SizeGroup::Small);
  CHECK(w->size_groups.at("c09") == SizeGroup::Big);
}

TEST_CASE("momentum grid ranks by compounded trailing return within halves") {
  SortFixture f = make_sort_fixture(10);
  auto sorts = weekly_sorts(f.returns, f.prices, f.universe, {}, nullptr);
  const WeeklySort* w = find_week(sorts, f.week);
  REQUIRE(w != nullptr);
  REQUIRE(!w->momentum_groups.empty());

  // Halves by cap: {c00..c04} small, {c05..c09} big. Within each half the
  // lowest daily return is Low, the highest is High (floor(0.3*5) = 1).
  CHECK(w->momentum_groups.at("c00") == std::pair<int, MomGroup>{0, MomGroup::Low});
  CHECK(w->momentum_groups.at("c04") == std::pair<int, MomGroup>{0, MomGroup::High});
  CHECK(w->momentum_groups.at("c05") == std::pair<int, MomGroup>{1, MomGroup::Low});
  CHECK(w->momentum_groups.at("c09") == std::pair<int, MomGroup>{1, MomGroup::High});
}

TEST_CASE("weeks with fewer than the minimum coins are skipped") {
  SortFixture f = make_sort_fixture(7);
  StageLog log;
  auto sorts = weekly_sorts(f.returns, f.prices, f.universe, {}, &log);
  CHECK(sorts.empty());
  CHECK(log.count(Errc::too_few_coins) > 0);
}

namespace {

// Manual one-week fixture with one coin per named slot and chosen returns.
struct ManualWeek {
  PriceTable prices;
  ReturnTable returns;
  WeeklySort sort;

  void add(const std::string& id, double cap, double ret,
           std::optional<SizeGroup> size_group,
           std::optional<std::pair<int, MomGroup>> mom_group) {
    const Date day = sort.week_start;  // Monday return day
    const Date prev = day - 1;
    prices.coins[id] = testutil::make_series(
        {CoinDay{prev, 100, cap * 0.05, cap},
         CoinDay{day, 100 * (1 + ret), cap * 0.05, cap}});
    returns[id] = {ReturnObs{day, prev, ret, ret}};
    if (size_group) sort.size_groups[id] = *size_group;
    if (mom_group) sort.momentum_groups[id] = *mom_group;
    sort.formation_caps[id] = cap;
  }
};

ManualWeek make_manual_week() {
  ManualWeek m;
  m.sort.week_start = make_date(2021, 3, 8);
  return m;
}

}  // namespace

TEST_CASE("smb is small minus big over the week's constituents") {
  {
    ManualWeek m = make_manual_week();
    m.add("s", 1e6, 0.03, SizeGroup::Small, std::nullopt);
    m.add("b", 9e6, 0.01, SizeGroup::Big, std::nullopt);
    auto series = smb_factor({m.sort}, m.returns, m.prices, nullptr);
    REQUIRE(series.size() == 1);
    CHECK(series[0].second == doctest::Approx(0.02).epsilon(1e-14));
  }
  {
    ManualWeek m = make_manual_week();
    m.add("s", 1e6, 0.02, SizeGroup::Small, std::nullopt);
    m.add("b", 9e6, 0.02, SizeGroup::Big, std::nullopt);
    auto series = smb_factor({m.sort}, m.returns, m.prices, nullptr);
    REQUIRE(series.size() == 1);
    CHECK(series[0].second == doctest::Approx(0.0));
  }
}

TEST_CASE("wml combines the four corner portfolios") {
  ManualWeek m = make_manual_week();
  m.add("sl", 1e6, 0.01, std::nullopt, std::pair{0, MomGroup::Low});
  m.add("sh", 1e6, 0.04, std::nullopt, std::pair{0, MomGroup::High});
  m.add("bl", 9e6, -0.01, std::nullopt, std::pair{1, MomGroup::Low});
  m.add("bh", 9e6, 0.02, std::nullopt, std::pair{1, MomGroup::High});

  auto series = wml_factor({m.sort}, m.returns, m.prices, nullptr);
  REQUIRE(series.size() == 1);
  // 1/2 (0.04 + 0.02) - 1/2 (0.01 - 0.01) = 0.03
  CHECK(std::fabs(series[0].second - 0.03) <= 1e-15);
}

TEST_CASE("wml is zero for symmetric inputs and flips under label swap") {
  {
    ManualWeek m = make_manual_week();
    for (auto [id, cell] :
         {std::pair{"sl", std::pair{0, MomGroup::Low}},
          std::pair{"sh", std::pair{0, MomGroup::High}},
          std::pair{"bl", std::pair{1, MomGroup::Low}},
          std::pair{"bh", std::pair{1, MomGroup::High}}}) {
      m.add(id, 1e6, 0.017, std::nullopt, cell);
    }
    auto series = wml_factor({m.sort}, m.returns, m.prices, nullptr);
    REQUIRE(series.size() == 1);
    CHECK(series[0].second == 0.0);
  }
  {
    ManualWeek a = make_manual_week();
    a.add("sl", 1e6, 0.01, std::nullopt, std::pair{0, MomGroup::Low});
    a.add("sh", 1e6, 0.04, std::nullopt, std::pair{0, MomGroup::High});
    a.add("bl", 9e6, -0.01, std::nullopt, std::pair{1, MomGroup::Low});
    a.add("bh", 9e6, 0.02, std::nullopt, std::pair{1, MomGroup::High});
    ManualWeek b = make_manual_week();
    b.add("sl", 1e6, 0.04, std::nullopt, std::pair{0, MomGroup::Low});
    b.add("sh", 1e6, 0.01, std::nullopt, std::pair{0, MomGroup::High});
    b.add("bl", 9e6, 0.02, std::nullopt, std::pair{1, MomGroup::Low});
    b.add("bh", 9e6, -0.01, std::nullopt, std::pair{1, MomGroup::High});
    auto sa = wml_factor({a.sort}, a.returns, a.prices, nullptr);
    auto sb = wml_factor({b.sort}, b.returns, b.prices, nullptr);
    REQUIRE(sa.size() == 1);
    REQUIRE(sb.size() == 1);
    CHECK(sa[0].second == doctest::Approx(-sb[0].second).epsilon(1e-14));
  }
}

TEST_CASE("weeks with an empty corner cell are skipped and logged") {
  ManualWeek m = make_manual_week();
  m.add("sl", 1e6, 0.01, std::nullopt, std::pair{0, MomGroup::Low});
  m.add("sh", 1e6, 0.04, std::nullopt, std::pair{0, MomGroup::High});
  m.add("bl", 9e6, -0.01, std::nullopt, std::pair{1, MomGroup::Low});
  // no BigHigh member
  StageLog log;
  auto series = wml_factor({m.sort}, m.returns, m.prices, &log);
  CHECK(series.empty());
  CHECK(log.count(Errc::empty_cell) == 1);
}

TEST_CASE("group returns aggregate back to the all-coin portfolio return") {
  SortFixture f = make_sort_fixture(15, 3.7e6);
  auto sorts = weekly_sorts(f.returns, f.prices, f.universe, {}, nullptr);
  const WeeklySort* w = find_week(sorts, f.week);
  REQUIRE(w != nullptr);

  const Date day = w->week_start + 2;
  std::vector<std::string> all;
  double combined_num = 0, combined_den = 0;
  for (auto group : {SizeGroup::Small, SizeGroup::Middle, SizeGroup::Big}) {
    std::vector<std::string> members;
    for (const auto& [coin, g] : w->size_groups) {
      if (g == group) members.push_back(coin);
    }
    auto r_g = value_weighted_return(members, day, f.returns, f.prices);
    REQUIRE(r_g.has_value());
    // weight sum recomputed independently from previous-day caps
    double w_g = 0;
    for (const auto& coin : members) {
      const auto& obs = f.returns.at(coin);
      auto it = std::find_if(obs.begin(), obs.end(),
                             [&](const ReturnObs& o) { return o.date == day; });
      REQUIRE(it != obs.end());
      w_g += f.prices.coins.at(coin).mcap_at(it->prev_date).value();
      all.push_back(coin);
    }
    combined_num += w_g * *r_g;
    combined_den += w_g;
  }
  auto r_all = value_weighted_return(all, day, f.returns, f.prices);
  REQUIRE(r_all.has_value());
  CHECK(combined_num / combined_den == doctest::Approx(*r_all).epsilon(1e-12));
}

TEST_CASE("smb and wml are invariant to a global cap rescaling") {
  SortFixture f = make_sort_fixture(15, 2.1e6);
  auto sorts_a = weekly_sorts(f.returns, f.prices, f.universe, {}, nullptr);
  auto smb_a = smb_factor(sorts_a, f.returns, f.prices, nullptr);
  auto wml_a = wml_factor(sorts_a, f.returns, f.prices, nullptr);

  SortFixture g = f;
  for (auto& [coin, series] : g.prices.coins) {
    for (auto& day : series.days) day.market_cap_usd *= 3.7;
  }
  auto sorts_b = weekly_sorts(g.returns, g.prices, g.universe, {}, nullptr);
  auto smb_b = smb_factor(sorts_b, g.returns, g.prices, nullptr);
  auto wml_b = wml_factor(sorts_b, g.returns, g.prices, nullptr);

  REQUIRE(smb_a.size() == smb_b.size());
  REQUIRE(wml_a.size() == wml_b.size());
  for (size_t i = 0; i < smb_a.size(); ++i) {
    CHECK(smb_a[i].first == smb_b[i].first);
    CHECK(smb_a[i].second == doctest::Approx(smb_b[i].second).epsilon(1e-12));
  }
  for (size_t i = 0; i < wml_a.size(); ++i) {
    CHECK(wml_a[i].second == doctest::Approx(wml_b[i].second).epsilon(1e-12));
  }
}

TEST_CASE("factor correlations: diagonal, antisymmetry, independence bound") {
  FactorTable t;
  Rng rng(99);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.normal();
    const double y = rng.normal();
    t.rows.push_back(FactorDay{make_date(2000, 1, 1) + i, x, -x, y, 0.0});
  }
  auto corr = factor_correlations(t);
  CHECK(corr[0][0] == doctest::Approx(1.0));
  CHECK(corr[1][1] == doctest::Approx(1.0));
  CHECK(corr[0][1] == doctest::Approx(-1.0).epsilon(1e-12));  // smb = -mrkt
  CHECK(std::fabs(corr[0][2]) < 0.05);  // independent draws, 2/sqrt(n)
  CHECK(corr[0][2] == doctest::Approx(corr[2][0]));

  FactorTable tiny;
  for (int i = 0; i < 10; ++i) {
    tiny.rows.push_back(FactorDay{make_date(2000, 1, 1) + i, 0.01, 0.0, 0.0, 0.0});
  }
  CHECK_THROWS_AS(factor_correlations(tiny), EstimationError);
}
