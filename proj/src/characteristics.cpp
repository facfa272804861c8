#include "cryptofactor/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cryptofactor/stats.hpp"

namespace cryptofactor {

namespace {

// First and one-past-last day rows of a month within a sorted series.
std::pair<size_t, size_t> month_span(const std::vector<CoinDay>& days,
                                     YearMonth month) {
  const Date lo = month_first(month);
  const Date hi = month_last(month);
  auto begin = std::lower_bound(
      days.begin(), days.end(), lo,
      [](const CoinDay& d, Date date) { return d.date < date; });
  auto end = std::upper_bound(
      days.begin(), days.end(), hi,
      [](Date date, const CoinDay& d) { return date < d.date; });
  return {static_cast<size_t>(begin - days.begin()),
          static_cast<size_t>(end - days.begin())};
}

std::optional<long> month_end_followers(const std::vector<FollowerObs>& obs,
                                        YearMonth month) {
  const Date hi = month_last(month);
  const Date lo = month_first(month);
  auto it = std::upper_bound(
      obs.begin(), obs.end(), hi,
      [](Date date, const FollowerObs& o) { return date < o.date; });
  if (it == obs.begin()) return std::nullopt;
  --it;
  if (it->date < lo) return std::nullopt;
  return it->followers;
}

}  // namespace

std::optional<double> size_char(const CoinSeries& series, YearMonth month) {
  auto [begin, end] = month_span(series.days, month);
  if (begin == end) return std::nullopt;
  const double cap = series.days[end - 1].market_cap_usd;
  if (cap <= 0) return std::nullopt;
  return std::log(cap);
}

std::optional<double> mom_char(const CoinSeries& series, YearMonth month) {
  auto [begin, end] = month_span(series.days, month);
  if (end - begin < 2) return std::nullopt;
  return series.days[end - 1].close_usd / series.days[begin].close_usd - 1.0;
}

std::optional<double> volume_char(const CoinSeries& series, YearMonth month) {
  auto [begin, end] = month_span(series.days, month);
  double sum = 0;
  int n = 0;
  for (size_t i = begin; i < end; ++i) {
    const double v = series.days[i].volume_usd;
    if (v > 0) {
      sum += std::log(v);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::optional<double> amihud_char(const CoinSeries& series,
                                  const std::vector<ReturnObs>& returns,
                                  YearMonth month) {
  const Date lo = month_first(month);
  const Date hi = month_last(month);
  auto it = std::lower_bound(
      returns.begin(), returns.end(), lo,
      [](const ReturnObs& o, Date date) { return o.date < date; });
  double sum = 0;
  int n = 0;
  for (; it != returns.end() && it->date <= hi; ++it) {
    const CoinDay* day = series.at(it->date);
    if (!day || day->volume_usd <= 0) continue;
    sum += std::fabs(it->ret) / (day->volume_usd / 1e6);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::optional<double> delta_investor_base(const std::vector<FollowerObs>& obs,
                                          YearMonth month, DibMode mode,
                                          double scale) {
  auto cur = month_end_followers(obs, month);
  auto prev = month_end_followers(obs, prev_month(month));
  if (!cur || !prev) return std::nullopt;
  if (mode == DibMode::Log) {
    if (*cur <= 0 || *prev <= 0) return std::nullopt;
    return std::log(static_cast<double>(*cur) / static_cast<double>(*prev));
  }
  return scale * static_cast<double>(*cur - *prev);
}

std::vector<CoinMonthRow> assemble_panel(
    const std::vector<RiskFit>& fits, const PriceTable& prices,
    const ReturnTable& returns, const FollowerTable& followers,
    const MetaMap& meta, DibMode dib_mode, double dib_scale, StageLog* log,
    PanelBuildStats* stats) {
  static const std::vector<ReturnObs> kNoReturns;
  static const std::vector<FollowerObs> kNoFollowers;

  std::vector<CoinMonthRow> panel;
  int dropped = 0;
  for (const RiskFit& fit : fits) {
    const YearMonth lag = prev_month(fit.month);
    const auto key = "panel coin=" + fit.coin_id + " month=" + to_string(fit.month);

    auto price_it = prices.coins.find(fit.coin_id);
    auto meta_it = meta.find(fit.coin_id);
    if (price_it == prices.coins.end() || meta_it == meta.end()) {
      ++dropped;
      if (log) log->skip(key, Errc::bad_value, "missing prices or metadata");
      continue;
    }
    auto ret_it = returns.find(fit.coin_id);
    const auto& coin_returns =
        ret_it == returns.end() ? kNoReturns : ret_it->second;
    auto fol_it = followers.find(fit.coin_id);
    const auto& coin_followers =
        fol_it == followers.end() ? kNoFollowers : fol_it->second;

    const auto dib =
        delta_investor_base(coin_followers, lag, dib_mode, dib_scale);
    const auto size = size_char(price_it->second, lag);
    const auto mom = mom_char(price_it->second, lag);
    const auto volume = volume_char(price_it->second, lag);
    const auto amihud = amihud_char(price_it->second, coin_returns, lag);

    std::string missing;
    if (!dib) missing = "d_investor_base";
    else if (!size) missing = "size";
    else if (!mom) missing = "mom";
    else if (!volume) missing = "volume";
    else if (!amihud) missing = "amihud";
    if (!missing.empty()) {
      ++dropped;
      if (log) log->skip(key, Errc::bad_value, "missing=" + missing);
      continue;
    }

    CoinMonthRow row;
    row.coin_id = fit.coin_id;
    row.month = fit.month;
    row.ivol = fit.ivol;
    row.d_investor_base = *dib;
    row.size = *size;
    row.mom = *mom;
    row.volume = *volume;
    row.amihud = *amihud;
    row.category = meta_it->second.category == Category::Coin ? 1 : 0;
    panel.push_back(std::move(row));
  }

  std::sort(panel.begin(), panel.end(),
            [](const CoinMonthRow& a, const CoinMonthRow& b) {
              return std::tie(a.coin_id, a.month) < std::tie(b.coin_id, b.month);
            });

  if (stats) {
    stats->rows_kept = static_cast<int>(panel.size());
    stats->rows_dropped = dropped;
  }
  if (panel.empty()) {
    throw DataError(Errc::empty_panel,
                    "no panel rows survive the lagged join");
  }
  return panel;
}

namespace {

const std::vector<std::string>& panel_columns() {
  static const std::vector<std::string> names = {
      "ivol", "d_investor_base", "size", "mom", "volume", "amihud", "category"};
  return names;
}

std::vector<double> extract(const std::vector<CoinMonthRow>& panel,
                            const std::string& name) {
  std::vector<double> out;
  out.reserve(panel.size());
  for (const auto& row : panel) {
    if (name == "ivol") out.push_back(row.ivol);
    else if (name == "d_investor_base") out.push_back(row.d_investor_base);
    else if (name == "size") out.push_back(row.size);
    else if (name == "mom") out.push_back(row.mom);
    else if (name == "volume") out.push_back(row.volume);
    else if (name == "amihud") out.push_back(row.amihud);
    else out.push_back(row.category);
  }
  return out;
}

}  // namespace

std::vector<ColumnSummary> summary_stats(
    const std::vector<CoinMonthRow>& panel) {
  std::vector<ColumnSummary> out;
  for (const auto& name : panel_columns()) {
    std::vector<double> x = extract(panel, name);
    std::vector<double> sorted(x);
    std::sort(sorted.begin(), sorted.end());
    ColumnSummary s;
    s.name = name;
    s.n = static_cast<int>(x.size());
    if (s.n > 0) {
      s.mean = stats::mean(x);
      s.sd = stats::sample_sd(x);
      s.min = sorted.front();
      s.p25 = stats::quantile_sorted(sorted, 0.25);
      s.median = stats::quantile_sorted(sorted, 0.50);
      s.p75 = stats::quantile_sorted(sorted, 0.75);
      s.max = sorted.back();
    }
    out.push_back(s);
  }
  return out;
}

CorrMatrix panel_correlations(const std::vector<CoinMonthRow>& panel) {
  if (panel.size() < 30) {
    throw EstimationError(Errc::too_few_observations,
                          "need >= 30 panel rows for correlations, got " +
                              std::to_string(panel.size()));
  }
  CorrMatrix m;
  m.names = panel_columns();
  std::vector<std::vector<double>> cols;
  for (const auto& name : m.names) cols.push_back(extract(panel, name));
  const size_t k = cols.size();
  m.values.assign(k, std::vector<double>(k, 0.0));
  for (size_t i = 0; i < k; ++i) {
    for (size_t j = 0; j < k; ++j) {
      m.values[i][j] = i == j ? 1.0 : stats::pearson(cols[i], cols[j]);
    }
  }
  return m;
}

PanelTable to_panel_table(const std::vector<CoinMonthRow>& panel) {
  PanelTable t;
  t.unit.reserve(panel.size());
  t.time.reserve(panel.size());
  for (const auto& row : panel) {
    t.unit.push_back(row.coin_id);
    t.time.push_back(to_string(row.month));
  }
  for (const auto& name : panel_columns()) t.add_col(name, extract(panel, name));
  return t;
}

}  // namespace cryptofactor
