#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cryptofactor/ingest.hpp"
#include "cryptofactor/log.hpp"

namespace cryptofactor {

struct FactorDay {
  Date date;
  double mrkt = 0;
  double smb = 0;
  double wml = 0;
  double rf_daily = 0;
};

struct FactorTable {
  std::vector<FactorDay> rows;  // sorted by date
  const FactorDay* at(Date d) const;
  bool empty() const { return rows.empty(); }
};

enum class SizeGroup { Small, Middle, Big };
enum class MomGroup { Low, Middle, High };

// One week's portfolio formation, fixed for every day of the week.
struct WeeklySort {
  Date week_start;
  std::map<std::string, SizeGroup> size_groups;         // 30/40/30 by cap
  // 2x3 grid: size half (0 = small, 1 = big) crossed with momentum tercile.
  std::map<std::string, std::pair<int, MomGroup>> momentum_groups;
  std::map<std::string, double> formation_caps;
};

struct SortConfig {
  int anchor_weekday = 1;  // Monday
  int momentum_window_days = 21;
  int momentum_min_obs = 15;
  int min_coins_per_week = 10;
  double bottom_fraction = 0.30;
  double top_fraction = 0.30;
};

using DatedSeries = std::vector<std::pair<Date, double>>;

// Value-weighted return of `members` on day d; the weight of each coin is
// its market cap on the return's chain predecessor. Empty when no member
// has both a return and a positive weight.
std::optional<double> value_weighted_return(
    const std::vector<std::string>& members, Date d, const ReturnTable& returns,
    const PriceTable& prices);

// Market excess return: value-weighted return of the eligible universe
// minus the daily risk-free rate.
DatedSeries market_factor(const ReturnTable& returns,
                          const UniverseSeries& universe,
                          const PriceTable& prices, const RateSeries& rf,
                          StageLog* log = nullptr);

// Weekly formation: size terciles (30/40/30 by formation cap) over all
// eligible coins, and a median-size x momentum-tercile 2x3 grid over coins
// with enough trailing returns. Ties broken by coin_id.
std::vector<WeeklySort> weekly_sorts(const ReturnTable& returns,
                                     const PriceTable& prices,
                                     const UniverseSeries& universe,
                                     const SortConfig& cfg = {},
                                     StageLog* log = nullptr);

// Small-minus-big daily spread using the week's constituent lists.
DatedSeries smb_factor(const std::vector<WeeklySort>& sorts,
                       const ReturnTable& returns, const PriceTable& prices,
                       StageLog* log = nullptr);

// Winner-minus-loser: 1/2 (SmallHigh + BigHigh) - 1/2 (SmallLow + BigLow).
DatedSeries wml_factor(const std::vector<WeeklySort>& sorts,
                       const ReturnTable& returns, const PriceTable& prices,
                       StageLog* log = nullptr);

// Dates where all three factors and the risk-free rate are available.
FactorTable assemble_factors(const DatedSeries& mrkt, const DatedSeries& smb,
                             const DatedSeries& wml, const RateSeries& rf);

// Pearson correlations over the table's common dates; requires >= 30 rows.
std::array<std::array<double, 3>, 3> factor_correlations(
    const FactorTable& factors);

}  // namespace cryptofactor
