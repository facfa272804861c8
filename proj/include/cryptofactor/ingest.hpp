#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cryptofactor/calendar.hpp"
#include "cryptofactor/errors.hpp"
#include "cryptofactor/log.hpp"

namespace cryptofactor {

struct CoinDay {
  Date date;
  double close_usd = 0;
  double volume_usd = 0;
  double market_cap_usd = 0;
};

// One coin's daily rows, sorted by date, unique dates.
struct CoinSeries {
  std::vector<CoinDay> days;
  const CoinDay* at(Date d) const;
  std::optional<double> mcap_at(Date d) const;
};

struct PriceTable {
  std::map<std::string, CoinSeries> coins;
  Date min_date{0};
  Date max_date{0};
  bool empty() const { return coins.empty(); }
};

enum class Category { Coin, Token };

struct CoinMeta {
  Category category = Category::Coin;
  std::string subreddit;  // empty means no listed subreddit
  bool is_stablecoin = false;
};
using MetaMap = std::map<std::string, CoinMeta>;

struct FollowerObs {
  Date date;
  long followers = 0;
};
// Sorted by date per coin.
using FollowerTable = std::map<std::string, std::vector<FollowerObs>>;

// Annualized risk-free rate knots, forward-filled to daily frequency.
class RateSeries {
 public:
  void add(Date d, double annual_rate);
  void finalize();  // sorts; throws on duplicate dates
  std::optional<double> annual_at(Date d) const;
  // annual/365: crypto trades on calendar days.
  std::optional<double> daily_at(Date d) const;
  bool empty() const { return knots_.empty(); }
  Date first_date() const { return knots_.front().first; }
  Date last_date() const { return knots_.back().first; }

 private:
  std::vector<std::pair<Date, double>> knots_;
};

struct ReturnObs {
  Date date;
  Date prev_date;  // chain predecessor the return is measured from
  double ret = 0;
  double excess = 0;
};
// Sorted by date per coin.
using ReturnTable = std::map<std::string, std::vector<ReturnObs>>;

struct UniverseSeries {
  std::map<Date, std::vector<std::string>> days;  // members sorted
  bool contains(Date d, const std::string& coin) const;
};

// CSV schema: date,coin_id,close_usd,volume_usd,market_cap_usd
PriceTable load_prices(const std::filesystem::path& path);
// CSV schema: coin_id,category,subreddit,is_stablecoin
MetaMap load_meta(const std::filesystem::path& path);
// CSV schema: date,coin_id,followers
FollowerTable load_followers(const std::filesystem::path& path);
// CSV schema: date,annual_rate
RateSeries load_riskfree(const std::filesystem::path& path);

// Simple daily returns chained over observed dates; a calendar gap larger
// than max_gap_days breaks the chain (no return for the resuming day).
// Excess return subtracts the forward-filled annual rate / 365.
ReturnTable compute_returns(const PriceTable& prices, const RateSeries& rf,
                            int max_gap_days = 7, StageLog* log = nullptr);

// Eligibility per day: market cap >= floor, volume > 0, not a stablecoin.
// Coins absent from the meta file are treated as non-stablecoins.
UniverseSeries build_universe(const PriceTable& prices, const MetaMap& meta,
                              double mcap_floor);

// Coins with a listed subreddit and at least min_years*365 eligible days
// (cumulative, not necessarily contiguous).
std::set<std::string> build_regression_sample(const UniverseSeries& universe,
                                              const MetaMap& meta,
                                              int min_years,
                                              StageLog* log = nullptr);

}  // namespace cryptofactor
