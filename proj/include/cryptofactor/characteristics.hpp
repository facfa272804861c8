#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cryptofactor/econometrics.hpp"
#include "cryptofactor/ingest.hpp"
#include "cryptofactor/riskmodel.hpp"

namespace cryptofactor {

// Assembled regression row: ivol at month t, regressors at t-1.
struct CoinMonthRow {
  std::string coin_id;
  YearMonth month;  // month of the dependent variable
  double ivol = 0;
  double d_investor_base = 0;
  double size = 0;
  double mom = 0;
  double volume = 0;
  double amihud = 0;
  int category = 0;  // 1 = coin, 0 = token
};

enum class DibMode { Raw, Log };

// Natural log of the month's last observed market cap.
std::optional<double> size_char(const CoinSeries& series, YearMonth month);

// last close / first close - 1 within the calendar month.
std::optional<double> mom_char(const CoinSeries& series, YearMonth month);

// Mean of ln(volume) over the month's positive-volume days.
std::optional<double> volume_char(const CoinSeries& series, YearMonth month);

// Mean of |r_d| / (Q_d / 10^6) over days with a return and positive volume.
std::optional<double> amihud_char(const CoinSeries& series,
                                  const std::vector<ReturnObs>& returns,
                                  YearMonth month);

// Change in the month-end follower level versus the previous month.
// Raw difference by default; Log uses ln(f_t / f_{t-1}). The scale factor
// applies to Raw mode only (unit conversion).
std::optional<double> delta_investor_base(const std::vector<FollowerObs>& obs,
                                          YearMonth month, DibMode mode,
                                          double scale = 1.0);

struct PanelBuildStats {
  int rows_kept = 0;
  int rows_dropped = 0;
};

// Joins ivol at month t with characteristics and investor-base change at
// t-1. Rows missing any field are dropped and counted. Throws EmptyPanel
// when nothing survives.
std::vector<CoinMonthRow> assemble_panel(
    const std::vector<RiskFit>& fits, const PriceTable& prices,
    const ReturnTable& returns, const FollowerTable& followers,
    const MetaMap& meta, DibMode dib_mode, double dib_scale = 1.0,
    StageLog* log = nullptr, PanelBuildStats* stats = nullptr);

struct ColumnSummary {
  std::string name;
  double mean = 0, sd = 0, min = 0, p25 = 0, median = 0, p75 = 0, max = 0;
  int n = 0;
};
std::vector<ColumnSummary> summary_stats(const std::vector<CoinMonthRow>& panel);

struct CorrMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
};
// Pearson correlations across the panel's numeric columns; >= 30 rows.
CorrMatrix panel_correlations(const std::vector<CoinMonthRow>& panel);

// Bridge to the regression engine. Columns: ivol, d_investor_base, size,
// mom, volume, amihud, category.
PanelTable to_panel_table(const std::vector<CoinMonthRow>& panel);

}  // namespace cryptofactor
