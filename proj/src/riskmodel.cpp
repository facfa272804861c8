#include "cryptofactor/riskmodel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <thread>

#include "cryptofactor/econometrics.hpp"

namespace cryptofactor {

namespace {

void run_indexed(int n_tasks, int threads,
                 const std::function<void(int)>& task) {
  threads = std::max(1, threads);
  if (threads == 1 || n_tasks < 2) {
    for (int i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  const int n_workers = std::min(threads, n_tasks);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n_tasks; i += n_workers) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

RiskFit fit_model(const std::string& coin_id, YearMonth month,
                  const std::vector<std::pair<Date, double>>& excess_returns,
                  const FactorTable& factors, RiskModel model,
                  const FitOptions& options) {
  std::vector<double> y;
  std::vector<const FactorDay*> f;
  for (const auto& [date, excess] : excess_returns) {
    if (ym_of(date) != month) continue;
    const FactorDay* day = factors.at(date);
    if (!day) continue;
    y.push_back(excess);
    f.push_back(day);
  }
  const int n = static_cast<int>(y.size());
  if (n < options.min_obs) {
    throw EstimationError(
        Errc::too_few_observations,
        coin_id + " " + to_string(month) + ": " + std::to_string(n) +
            " usable days, need " + std::to_string(options.min_obs));
  }

  const int k_factors = model == RiskModel::Capm ? 1 : 3;
  Eigen::MatrixXd X(n, k_factors);
  Eigen::VectorXd yv(n);
  for (int i = 0; i < n; ++i) {
    yv[i] = y[i];
    X(i, 0) = f[i]->mrkt;
    if (k_factors == 3) {
      X(i, 1) = f[i]->smb;
      X(i, 2) = f[i]->wml;
    }
  }

  OlsFit ols_fit;
  try {
    ols_fit = ols(X, yv, /*add_intercept=*/true);
  } catch (const EstimationError& e) {
    if (e.code() == Errc::rank_deficient ||
        e.code() == Errc::underdetermined) {
      throw EstimationError(Errc::singular_design,
                            coin_id + " " + to_string(month) +
                                ": factor matrix is singular this month");
    }
    throw;
  }

  RiskFit fit;
  fit.coin_id = coin_id;
  fit.month = month;
  fit.model = model;
  fit.alpha = ols_fit.coef[0];
  fit.beta_mrkt = ols_fit.coef[1];
  fit.se_alpha = ols_fit.se[0];
  fit.se_mrkt = ols_fit.se[1];
  if (k_factors == 3) {
    fit.beta_smb = ols_fit.coef[2];
    fit.beta_wml = ols_fit.coef[3];
    fit.se_smb = ols_fit.se[2];
    fit.se_wml = ols_fit.se[3];
  }
  fit.residuals.assign(ols_fit.residuals.data(),
                       ols_fit.residuals.data() + n);
  fit.n_obs = n;
  fit.r2 = ols_fit.r2;
  fit.rss = ols_fit.rss;

  const int divisor =
      options.ivol_mode == IvolMode::Population ? n : n - ols_fit.k;
  fit.ivol = divisor > 0 ? std::sqrt(fit.rss / divisor) : 0.0;
  return fit;
}

std::vector<RiskFit> ivol_panel(const ReturnTable& returns,
                                const FactorTable& factors,
                                const std::set<std::string>& coins,
                                RiskModel model, const FitOptions& options,
                                StageLog* log, int threads) {
  // Enumerate (coin, month) tasks deterministically.
  struct Task {
    const std::string* coin;
    YearMonth month;
    std::vector<std::pair<Date, double>> excess;
  };
  std::vector<Task> tasks;
  for (const auto& coin : coins) {
    auto it = returns.find(coin);
    if (it == returns.end()) continue;
    std::map<YearMonth, std::vector<std::pair<Date, double>>> by_month;
    for (const ReturnObs& obs : it->second) {
      by_month[ym_of(obs.date)].emplace_back(obs.date, obs.excess);
    }
    for (auto& [month, excess] : by_month) {
      tasks.push_back(Task{&coin, month, std::move(excess)});
    }
  }

  std::vector<RiskFit> fits(tasks.size());
  std::vector<char> ok(tasks.size(), 0);
  std::vector<std::string> skip_reason(tasks.size());
  run_indexed(static_cast<int>(tasks.size()), threads, [&](int i) {
    try {
      fits[i] = fit_model(*tasks[i].coin, tasks[i].month, tasks[i].excess,
                          factors, model, options);
      ok[i] = 1;
    } catch (const EstimationError& e) {
      skip_reason[i] = errc_name(e.code());
    }
  });

  std::vector<RiskFit> out;
  out.reserve(tasks.size());
  for (size_t i = 0; i < tasks.size(); ++i) {
    if (ok[i]) {
      out.push_back(std::move(fits[i]));
    } else if (log) {
      log->skip("fit coin=" + *tasks[i].coin +
                    " month=" + to_string(tasks[i].month),
                skip_reason[i] == "singular_design" ? Errc::singular_design
                                                    : Errc::too_few_observations,
                "");
    }
  }
  return out;
}

std::vector<std::pair<YearMonth, double>> ew_ivol_series(
    const std::vector<RiskFit>& fits) {
  std::map<YearMonth, std::pair<double, int>> acc;
  for (const auto& fit : fits) {
    auto& [sum, count] = acc[fit.month];
    sum += fit.ivol;
    ++count;
  }
  std::vector<std::pair<YearMonth, double>> out;
  out.reserve(acc.size());
  for (const auto& [month, sc] : acc) {
    out.emplace_back(month, 100.0 * sc.first / sc.second);
  }
  return out;
}

}  // namespace cryptofactor
