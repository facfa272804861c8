#pragma once

#include <set>
#include <string>
#include <vector>

#include "cryptofactor/factors.hpp"
#include "cryptofactor/ingest.hpp"
#include "cryptofactor/log.hpp"

namespace cryptofactor {

enum class RiskModel { Capm, ThreeFactor };

// Divisor for the residual variance: n (population) or n - k.
enum class IvolMode { Population, Sample };

struct RiskFit {
  std::string coin_id;
  YearMonth month;
  RiskModel model = RiskModel::Capm;
  double alpha = 0;
  double beta_mrkt = 0;
  double beta_smb = 0;  // meaningful only for ThreeFactor
  double beta_wml = 0;
  double se_alpha = 0;
  double se_mrkt = 0;
  double se_smb = 0;
  double se_wml = 0;
  std::vector<double> residuals;
  int n_obs = 0;
  double r2 = 0;
  double rss = 0;
  double ivol = 0;
};

struct FitOptions {
  int min_obs = 10;
  IvolMode ivol_mode = IvolMode::Population;
};

// OLS of one coin's within-month daily excess returns on the factor
// realizations; ivol is the standard deviation of the residuals.
// Throws TooFewObservations / SingularDesign.
RiskFit fit_model(const std::string& coin_id, YearMonth month,
                  const std::vector<std::pair<Date, double>>& excess_returns,
                  const FactorTable& factors, RiskModel model,
                  const FitOptions& options = {});

// One fit per (coin, month) with enough overlapping days; failures are
// logged and skipped. Deterministic output ordered by (coin, month).
std::vector<RiskFit> ivol_panel(const ReturnTable& returns,
                                const FactorTable& factors,
                                const std::set<std::string>& coins,
                                RiskModel model, const FitOptions& options = {},
                                StageLog* log = nullptr, int threads = 1);

// Equal-weighted mean ivol per month, in percent.
std::vector<std::pair<YearMonth, double>> ew_ivol_series(
    const std::vector<RiskFit>& fits);

}  // namespace cryptofactor
