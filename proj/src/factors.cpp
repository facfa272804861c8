#include "cryptofactor/factors.hpp"

#include <algorithm>
#include <cmath>

#include "cryptofactor/stats.hpp"

namespace cryptofactor {

namespace {

const ReturnObs* return_on(const ReturnTable& returns, const std::string& coin,
                           Date d) {
  auto it = returns.find(coin);
  if (it == returns.end()) return nullptr;
  const auto& obs = it->second;
  auto pos = std::lower_bound(
      obs.begin(), obs.end(), d,
      [](const ReturnObs& o, Date date) { return o.date < date; });
  if (pos == obs.end() || pos->date != d) return nullptr;
  return &*pos;
}

// Cumulative return over the coin's observed returns in [from, to].
// Empty when fewer than min_obs observations fall in the window.
std::optional<double> window_momentum(const ReturnTable& returns,
                                      const std::string& coin, Date from,
                                      Date to, int min_obs) {
  auto it = returns.find(coin);
  if (it == returns.end()) return std::nullopt;
  const auto& obs = it->second;
  auto pos = std::lower_bound(
      obs.begin(), obs.end(), from,
      [](const ReturnObs& o, Date date) { return o.date < date; });
  int n = 0;
  double growth = 1.0;
  for (; pos != obs.end() && pos->date <= to; ++pos) {
    growth *= 1.0 + pos->ret;
    ++n;
  }
  if (n < min_obs) return std::nullopt;
  return growth - 1.0;
}

// Splits ranked names into bottom/middle/top groups of sizes
// floor(bottom*n) / rest / floor(top*n).
template <typename Group>
void assign_terciles(const std::vector<std::string>& ranked, double bottom,
                     double top, Group lo, Group mid, Group hi,
                     std::map<std::string, Group>& out) {
  const int n = static_cast<int>(ranked.size());
  const int n_lo = static_cast<int>(std::floor(bottom * n));
  const int n_hi = static_cast<int>(std::floor(top * n));
  for (int i = 0; i < n; ++i) {
    Group g = mid;
    if (i < n_lo) {
      g = lo;
    } else if (i >= n - n_hi) {
      g = hi;
    }
    out[ranked[i]] = g;
  }
}

}  // namespace

const FactorDay* FactorTable::at(Date d) const {
  auto it = std::lower_bound(
      rows.begin(), rows.end(), d,
      [](const FactorDay& row, Date date) { return row.date < date; });
  if (it == rows.end() || it->date != d) return nullptr;
  return &*it;
}

std::optional<double> value_weighted_return(
    const std::vector<std::string>& members, Date d, const ReturnTable& returns,
    const PriceTable& prices) {
  double w_sum = 0;
  double wr_sum = 0;
  for (const auto& coin : members) {
    const ReturnObs* obs = return_on(returns, coin, d);
    if (!obs) continue;
    auto series = prices.coins.find(coin);
    if (series == prices.coins.end()) continue;
    auto cap = series->second.mcap_at(obs->prev_date);
    if (!cap || *cap <= 0) continue;
    w_sum += *cap;
    wr_sum += *cap * obs->ret;
  }
  if (w_sum <= 0) return std::nullopt;
  return wr_sum / w_sum;
}

DatedSeries market_factor(const ReturnTable& returns,
                          const UniverseSeries& universe,
                          const PriceTable& prices, const RateSeries& rf,
                          StageLog* log) {
  DatedSeries out;
  for (const auto& [date, members] : universe.days) {
    const auto rf_daily = rf.daily_at(date);
    if (!rf_daily) {
      if (log) log->skip("mrkt date=" + to_string(date), Errc::no_riskfree, "");
      continue;
    }
    auto vw = value_weighted_return(members, date, returns, prices);
    if (!vw) {
      if (log) {
        log->skip("mrkt date=" + to_string(date), Errc::empty_universe,
                  "no eligible coin with return and weight");
      }
      continue;
    }
    out.emplace_back(date, *vw - *rf_daily);
  }
  return out;
}

std::vector<WeeklySort> weekly_sorts(const ReturnTable& returns,
                                     const PriceTable& prices,
                                     const UniverseSeries& universe,
                                     const SortConfig& cfg, StageLog* log) {
  if (universe.days.empty()) return {};
  const Date first = universe.days.begin()->first;
  const Date last = universe.days.rbegin()->first;

  std::vector<WeeklySort> sorts;
  Date w = week_start(first, cfg.anchor_weekday);
  // First full week whose formation day precedes it inside the sample.
  if (w <= first) w = w + 7;
  for (; w <= last; w = w + 7) {
    const Date formation = w - 1;
    auto uni = universe.days.find(formation);
    if (uni == universe.days.end()) {
      if (log) {
        log->skip("week=" + to_string(w), Errc::empty_universe,
                  "no universe on formation day " + to_string(formation));
      }
      continue;
    }

    // Eligible: in the universe with a cap observation on the formation day.
    std::vector<std::pair<double, std::string>> by_cap;
    for (const auto& coin : uni->second) {
      auto series = prices.coins.find(coin);
      if (series == prices.coins.end()) continue;
      auto cap = series->second.mcap_at(formation);
      if (!cap || *cap <= 0) continue;
      by_cap.emplace_back(*cap, coin);
    }
    if (static_cast<int>(by_cap.size()) < cfg.min_coins_per_week) {
      if (log) {
        log->skip("week=" + to_string(w), Errc::too_few_coins,
                  "eligible=" + std::to_string(by_cap.size()));
      }
      continue;
    }
    std::sort(by_cap.begin(), by_cap.end());  // cap asc, coin_id tiebreak

    WeeklySort sort;
    sort.week_start = w;
    std::vector<std::string> ranked;
    ranked.reserve(by_cap.size());
    for (const auto& [cap, coin] : by_cap) {
      ranked.push_back(coin);
      sort.formation_caps[coin] = cap;
    }
    assign_terciles(ranked, cfg.bottom_fraction, cfg.top_fraction,
                    SizeGroup::Small, SizeGroup::Middle, SizeGroup::Big,
                    sort.size_groups);

    // Momentum grid: median size split over coins with a trailing score.
    const Date mom_from = w - cfg.momentum_window_days;
    std::vector<std::pair<double, std::string>> with_score_by_cap;
    std::map<std::string, double> scores;
    for (const auto& [cap, coin] : by_cap) {
      auto score = window_momentum(returns, coin, mom_from, formation,
                                   cfg.momentum_min_obs);
      if (!score) continue;
      scores[coin] = *score;
      with_score_by_cap.emplace_back(cap, coin);
    }
    if (static_cast<int>(with_score_by_cap.size()) >= cfg.min_coins_per_week) {
      const int n = static_cast<int>(with_score_by_cap.size());
      const int n_small = n / 2;
      for (int half = 0; half < 2; ++half) {
        std::vector<std::pair<double, std::string>> by_score;
        const int lo = half == 0 ? 0 : n_small;
        const int hi = half == 0 ? n_small : n;
        for (int i = lo; i < hi; ++i) {
          const auto& coin = with_score_by_cap[i].second;
          by_score.emplace_back(scores[coin], coin);
        }
        std::sort(by_score.begin(), by_score.end());
        std::vector<std::string> mom_ranked;
        for (const auto& [s, coin] : by_score) mom_ranked.push_back(coin);
        std::map<std::string, MomGroup> groups;
        assign_terciles(mom_ranked, cfg.bottom_fraction, cfg.top_fraction,
                        MomGroup::Low, MomGroup::Middle, MomGroup::High,
                        groups);
        for (const auto& [coin, g] : groups) {
          sort.momentum_groups[coin] = {half, g};
        }
      }
    } else if (log) {
      log->skip("week=" + to_string(w) + " momentum", Errc::too_few_coins,
                "with_score=" + std::to_string(with_score_by_cap.size()));
    }

    sorts.push_back(std::move(sort));
  }
  return sorts;
}

DatedSeries smb_factor(const std::vector<WeeklySort>& sorts,
                       const ReturnTable& returns, const PriceTable& prices,
                       StageLog* log) {
  DatedSeries out;
  for (const auto& sort : sorts) {
    std::vector<std::string> small, big;
    for (const auto& [coin, group] : sort.size_groups) {
      if (group == SizeGroup::Small) small.push_back(coin);
      if (group == SizeGroup::Big) big.push_back(coin);
    }
    for (int d = 0; d < 7; ++d) {
      const Date date = sort.week_start + d;
      auto r_small = value_weighted_return(small, date, returns, prices);
      auto r_big = value_weighted_return(big, date, returns, prices);
      if (!r_small || !r_big) {
        if (log && (r_small || r_big)) {
          log->skip("smb date=" + to_string(date), Errc::empty_cell,
                    std::string("missing ") + (r_small ? "big" : "small") +
                        " side");
        }
        continue;
      }
      out.emplace_back(date, *r_small - *r_big);
    }
  }
  return out;
}

DatedSeries wml_factor(const std::vector<WeeklySort>& sorts,
                       const ReturnTable& returns, const PriceTable& prices,
                       StageLog* log) {
  DatedSeries out;
  for (const auto& sort : sorts) {
    if (sort.momentum_groups.empty()) {
      if (log) {
        log->skip("wml week=" + to_string(sort.week_start), Errc::empty_cell,
                  "no momentum grid");
      }
      continue;
    }
    // Corner portfolios of the 2x3 grid; middles are not used.
    std::vector<std::string> cells[2][2];  // [half][0=Low,1=High]
    for (const auto& [coin, hg] : sort.momentum_groups) {
      const auto& [half, group] = hg;
      if (group == MomGroup::Low) cells[half][0].push_back(coin);
      if (group == MomGroup::High) cells[half][1].push_back(coin);
    }
    bool missing_cell = false;
    for (int h = 0; h < 2 && !missing_cell; ++h) {
      for (int c = 0; c < 2 && !missing_cell; ++c) {
        if (cells[h][c].empty()) missing_cell = true;
      }
    }
    if (missing_cell) {
      if (log) {
        log->skip("wml week=" + to_string(sort.week_start), Errc::empty_cell,
                  "empty corner portfolio at formation");
      }
      continue;
    }
    for (int d = 0; d < 7; ++d) {
      const Date date = sort.week_start + d;
      auto small_low = value_weighted_return(cells[0][0], date, returns, prices);
      auto small_high = value_weighted_return(cells[0][1], date, returns, prices);
      auto big_low = value_weighted_return(cells[1][0], date, returns, prices);
      auto big_high = value_weighted_return(cells[1][1], date, returns, prices);
      if (!small_low || !small_high || !big_low || !big_high) {
        bool any = small_low || small_high || big_low || big_high;
        if (log && any) {
          log->skip("wml date=" + to_string(date), Errc::empty_cell,
                    "corner portfolio without returns");
        }
        continue;
      }
      out.emplace_back(date, 0.5 * (*small_high + *big_high) -
                                 0.5 * (*small_low + *big_low));
    }
  }
  return out;
}

FactorTable assemble_factors(const DatedSeries& mrkt, const DatedSeries& smb,
                             const DatedSeries& wml, const RateSeries& rf) {
  std::map<Date, FactorDay> by_date;
  std::map<Date, int> present;
  for (const auto& [d, v] : mrkt) {
    by_date[d].date = d;
    by_date[d].mrkt = v;
    present[d] |= 1;
  }
  for (const auto& [d, v] : smb) {
    by_date[d].date = d;
    by_date[d].smb = v;
    present[d] |= 2;
  }
  for (const auto& [d, v] : wml) {
    by_date[d].date = d;
    by_date[d].wml = v;
    present[d] |= 4;
  }

  FactorTable table;
  for (auto& [d, row] : by_date) {
    if (present[d] != 7) continue;
    auto rf_daily = rf.daily_at(d);
    if (!rf_daily) continue;
    row.rf_daily = *rf_daily;
    if (!std::isfinite(row.mrkt) || !std::isfinite(row.smb) ||
        !std::isfinite(row.wml)) {
      continue;
    }
    table.rows.push_back(row);
  }
  return table;
}

std::array<std::array<double, 3>, 3> factor_correlations(
    const FactorTable& factors) {
  const size_t n = factors.rows.size();
  if (n < 30) {
    throw EstimationError(Errc::too_few_observations,
                          "need >= 30 overlapping factor days, got " +
                              std::to_string(n));
  }
  std::array<std::vector<double>, 3> series;
  for (const auto& row : factors.rows) {
    series[0].push_back(row.mrkt);
    series[1].push_back(row.smb);
    series[2].push_back(row.wml);
  }
  std::array<std::array<double, 3>, 3> m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      m[i][j] = i == j ? 1.0 : stats::pearson(series[i], series[j]);
    }
  }
  return m;
}

}  // namespace cryptofactor
