#include "cryptofactor/ingest.hpp"

#include <algorithm>
#include <cmath>

#include "cryptofactor/csv.hpp"

namespace cryptofactor {

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
  }
  return out;
}

}  // namespace

const CoinDay* CoinSeries::at(Date d) const {
  auto it = std::lower_bound(
      days.begin(), days.end(), d,
      [](const CoinDay& row, Date date) { return row.date < date; });
  if (it == days.end() || it->date != d) return nullptr;
  return &*it;
}

std::optional<double> CoinSeries::mcap_at(Date d) const {
  const CoinDay* row = at(d);
  if (!row) return std::nullopt;
  return row->market_cap_usd;
}

void RateSeries::add(Date d, double annual_rate) {
  knots_.emplace_back(d, annual_rate);
}

void RateSeries::finalize() {
  std::sort(knots_.begin(), knots_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t i = 1; i < knots_.size(); ++i) {
    if (knots_[i].first == knots_[i - 1].first) {
      throw DataError(Errc::duplicate_key,
                      "duplicate risk-free rate for " +
                          to_string(knots_[i].first));
    }
  }
}

std::optional<double> RateSeries::annual_at(Date d) const {
  if (knots_.empty() || d < knots_.front().first) return std::nullopt;
  auto it = std::upper_bound(
      knots_.begin(), knots_.end(), d,
      [](Date date, const auto& knot) { return date < knot.first; });
  return std::prev(it)->second;
}

std::optional<double> RateSeries::daily_at(Date d) const {
  auto annual = annual_at(d);
  if (!annual) return std::nullopt;
  return *annual / 365.0;
}

bool UniverseSeries::contains(Date d, const std::string& coin) const {
  auto it = days.find(d);
  if (it == days.end()) return false;
  return std::binary_search(it->second.begin(), it->second.end(), coin);
}

PriceTable load_prices(const std::filesystem::path& path) {
  CsvFile f(path,
            {"date", "coin_id", "close_usd", "volume_usd", "market_cap_usd"});
  const size_t c_date = f.col("date");
  const size_t c_coin = f.col("coin_id");
  const size_t c_close = f.col("close_usd");
  const size_t c_vol = f.col("volume_usd");
  const size_t c_mcap = f.col("market_cap_usd");

  ErrorList errs;
  PriceTable table;
  std::map<std::string, std::set<int>> seen;  // coin -> day keys
  for (size_t r = 0; r < f.row_count(); ++r) {
    const size_t line = f.line_number(r);
    Date date;
    if (!f.try_date(r, c_date, date)) {
      errs.add(Errc::bad_value, line,
               "bad date '" + std::string(f.field(r, c_date)) + "'");
      continue;
    }
    std::string coin(f.field(r, c_coin));
    if (coin.empty()) {
      errs.add(Errc::bad_value, line, "empty coin_id");
      continue;
    }
    double close, vol, mcap;
    if (!f.try_number(r, c_close, close) || !std::isfinite(close) ||
        close <= 0) {
      errs.add(Errc::bad_numeric, line,
               "close_usd must be a positive number, got '" +
                   std::string(f.field(r, c_close)) + "'");
      continue;
    }
    if (!f.try_number(r, c_vol, vol) || !std::isfinite(vol) || vol < 0) {
      errs.add(Errc::bad_numeric, line,
               "volume_usd must be a non-negative number, got '" +
                   std::string(f.field(r, c_vol)) + "'");
      continue;
    }
    if (!f.try_number(r, c_mcap, mcap) || !std::isfinite(mcap) || mcap < 0) {
      errs.add(Errc::bad_numeric, line,
               "market_cap_usd must be a non-negative number, got '" +
                   std::string(f.field(r, c_mcap)) + "'");
      continue;
    }
    if (!seen[coin].insert(date.days).second) {
      errs.add(Errc::duplicate_key, line,
               "duplicate (" + coin + ", " + to_string(date) + ")");
      continue;
    }
    table.coins[coin].days.push_back(CoinDay{date, close, vol, mcap});
  }
  errs.throw_if_any(f.path());
  if (table.coins.empty()) {
    throw DataError(Errc::empty_series, f.path() + ": no price rows");
  }

  bool first = true;
  for (auto& [coin, series] : table.coins) {
    std::sort(series.days.begin(), series.days.end(),
              [](const CoinDay& a, const CoinDay& b) { return a.date < b.date; });
    if (first) {
      table.min_date = series.days.front().date;
      table.max_date = series.days.back().date;
      first = false;
    } else {
      table.min_date = std::min(table.min_date, series.days.front().date);
      table.max_date = std::max(table.max_date, series.days.back().date);
    }
  }
  return table;
}

MetaMap load_meta(const std::filesystem::path& path) {
  CsvFile f(path, {"coin_id", "category", "subreddit", "is_stablecoin"});
  const size_t c_coin = f.col("coin_id");
  const size_t c_cat = f.col("category");
  const size_t c_sub = f.col("subreddit");
  const size_t c_stable = f.col("is_stablecoin");

  ErrorList errs;
  MetaMap meta;
  for (size_t r = 0; r < f.row_count(); ++r) {
    const size_t line = f.line_number(r);
    std::string coin(f.field(r, c_coin));
    if (coin.empty()) {
      errs.add(Errc::bad_value, line, "empty coin_id");
      continue;
    }
    if (meta.count(coin)) {
      errs.add(Errc::duplicate_key, line, "duplicate coin_id '" + coin + "'");
      continue;
    }
    CoinMeta m;
    const std::string cat = ascii_lower(f.field(r, c_cat));
    if (cat == "coin") {
      m.category = Category::Coin;
    } else if (cat == "token") {
      m.category = Category::Token;
    } else {
      errs.add(Errc::bad_value, line,
               "category must be coin or token, got '" + cat + "'");
      continue;
    }
    m.subreddit = std::string(f.field(r, c_sub));
    const std::string stable = ascii_lower(f.field(r, c_stable));
    if (stable == "true" || stable == "1") {
      m.is_stablecoin = true;
    } else if (stable == "false" || stable == "0") {
      m.is_stablecoin = false;
    } else {
      errs.add(Errc::bad_value, line,
               "is_stablecoin must be true/false, got '" + stable + "'");
      continue;
    }
    meta.emplace(std::move(coin), std::move(m));
  }
  errs.throw_if_any(f.path());
  return meta;
}

FollowerTable load_followers(const std::filesystem::path& path) {
  CsvFile f(path, {"date", "coin_id", "followers"});
  const size_t c_date = f.col("date");
  const size_t c_coin = f.col("coin_id");
  const size_t c_fol = f.col("followers");

  ErrorList errs;
  FollowerTable table;
  std::map<std::string, std::set<int>> seen;
  for (size_t r = 0; r < f.row_count(); ++r) {
    const size_t line = f.line_number(r);
    Date date;
    if (!f.try_date(r, c_date, date)) {
      errs.add(Errc::bad_value, line,
               "bad date '" + std::string(f.field(r, c_date)) + "'");
      continue;
    }
    std::string coin(f.field(r, c_coin));
    long followers;
    if (!f.try_integer(r, c_fol, followers) || followers < 0) {
      errs.add(Errc::bad_numeric, line,
               "followers must be a non-negative integer, got '" +
                   std::string(f.field(r, c_fol)) + "'");
      continue;
    }
    if (!seen[coin].insert(date.days).second) {
      errs.add(Errc::duplicate_key, line,
               "duplicate (" + coin + ", " + to_string(date) + ")");
      continue;
    }
    table[coin].push_back(FollowerObs{date, followers});
  }
  errs.throw_if_any(f.path());
  for (auto& [coin, series] : table) {
    std::sort(series.begin(), series.end(),
              [](const FollowerObs& a, const FollowerObs& b) {
                return a.date < b.date;
              });
  }
  return table;
}

RateSeries load_riskfree(const std::filesystem::path& path) {
  CsvFile f(path, {"date", "annual_rate"});
  const size_t c_date = f.col("date");
  const size_t c_rate = f.col("annual_rate");

  ErrorList errs;
  RateSeries series;
  for (size_t r = 0; r < f.row_count(); ++r) {
    const size_t line = f.line_number(r);
    Date date;
    if (!f.try_date(r, c_date, date)) {
      errs.add(Errc::bad_value, line,
               "bad date '" + std::string(f.field(r, c_date)) + "'");
      continue;
    }
    double rate;
    if (!f.try_number(r, c_rate, rate) || !std::isfinite(rate) ||
        rate < -0.05) {
      errs.add(Errc::bad_numeric, line,
               "annual_rate must be a number >= -0.05, got '" +
                   std::string(f.field(r, c_rate)) + "'");
      continue;
    }
    series.add(date, rate);
  }
  errs.throw_if_any(f.path());
  if (series.empty()) {
    throw DataError(Errc::empty_series, f.path() + ": no rate rows");
  }
  series.finalize();
  return series;
}

ReturnTable compute_returns(const PriceTable& prices, const RateSeries& rf,
                            int max_gap_days, StageLog* log) {
  ReturnTable table;
  size_t covered = 0;
  size_t produced = 0;
  for (const auto& [coin, series] : prices.coins) {
    std::vector<ReturnObs> obs;
    for (size_t i = 1; i < series.days.size(); ++i) {
      const CoinDay& prev = series.days[i - 1];
      const CoinDay& cur = series.days[i];
      const int gap = cur.date - prev.date;
      if (gap > max_gap_days) {
        if (log) {
          log->skip("return coin=" + coin + " date=" + to_string(cur.date),
                    Errc::gap_break, "gap_days=" + std::to_string(gap));
        }
        continue;
      }
      ++produced;
      const double ret = cur.close_usd / prev.close_usd - 1.0;
      const auto rf_daily = rf.daily_at(cur.date);
      if (!rf_daily) {
        if (log) {
          log->skip("return coin=" + coin + " date=" + to_string(cur.date),
                    Errc::no_riskfree, "");
        }
        continue;
      }
      ++covered;
      obs.push_back(ReturnObs{cur.date, prev.date, ret, ret - *rf_daily});
    }
    if (!obs.empty()) table[coin] = std::move(obs);
  }
  if (produced > 0 && covered == 0) {
    throw DataError(Errc::empty_series,
                    "risk-free series covers no sample dates");
  }
  return table;
}

UniverseSeries build_universe(const PriceTable& prices, const MetaMap& meta,
                              double mcap_floor) {
  UniverseSeries universe;
  for (const auto& [coin, series] : prices.coins) {
    bool stable = false;
    auto it = meta.find(coin);
    if (it != meta.end()) stable = it->second.is_stablecoin;
    if (stable) continue;
    for (const CoinDay& day : series.days) {
      if (day.market_cap_usd >= mcap_floor && day.volume_usd > 0) {
        universe.days[day.date].push_back(coin);
      }
    }
  }
  // Members arrive in map order per date, already sorted; keep invariant
  // explicit for binary_search-based lookups.
  for (auto& [date, members] : universe.days) {
    std::sort(members.begin(), members.end());
  }
  return universe;
}

std::set<std::string> build_regression_sample(const UniverseSeries& universe,
                                              const MetaMap& meta,
                                              int min_years, StageLog* log) {
  std::map<std::string, int> eligible_days;
  for (const auto& [date, members] : universe.days) {
    for (const auto& coin : members) ++eligible_days[coin];
  }

  const int need = min_years * 365;
  std::set<std::string> sample;
  for (const auto& [coin, days] : eligible_days) {
    auto it = meta.find(coin);
    const bool has_subreddit = it != meta.end() && !it->second.subreddit.empty();
    if (!has_subreddit) {
      if (log) {
        log->skip("sample coin=" + coin, Errc::bad_value, "no_subreddit");
      }
      continue;
    }
    if (days < need) {
      if (log) {
        log->skip("sample coin=" + coin, Errc::too_few_observations,
                  "eligible_days=" + std::to_string(days) +
                      " need=" + std::to_string(need));
      }
      continue;
    }
    sample.insert(coin);
  }
  return sample;
}

}  // namespace cryptofactor
