#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cryptofactor/riskmodel.hpp"
#include "cryptofactor/rng.hpp"

using namespace cryptofactor;

namespace {

// Factor table over one calendar month with seeded normal draws.
FactorTable month_factors(YearMonth month, int n_days, uint64_t seed,
                          double sigma_mrkt = 0.02, double sigma_smb = 0.01,
                          double sigma_wml = 0.01) {
  Rng rng(seed);
  FactorTable t;
  const Date first = month_first(month);
  for (int i = 0; i < n_days; ++i) {
    t.rows.push_back(FactorDay{first + i, sigma_mrkt * rng.normal(),
                               sigma_smb * rng.normal(),
                               sigma_wml * rng.normal(), 0.0});
  }
  return t;
}

std::vector<std::pair<Date, double>> linear_response(const FactorTable& f,
                                                     double alpha, double beta,
                                                     double s = 0,
                                                     double w = 0) {
  std::vector<std::pair<Date, double>> y;
  for (const auto& row : f.rows) {
    y.emplace_back(row.date,
                   alpha + beta * row.mrkt + s * row.smb + w * row.wml);
  }
  return y;
}

}  // namespace

TEST_CASE("zero-noise month recovers alpha and beta exactly") {
  const YearMonth month{2021, 4};
  FactorTable f = month_factors(month, 30, 11);
  auto y = linear_response(f, 0.001, 1.2);

  RiskFit fit = fit_model("btc", month, y, f, RiskModel::Capm);
  CHECK(fit.alpha == doctest::Approx(0.001).epsilon(1e-10));
  CHECK(fit.beta_mrkt == doctest::Approx(1.2).epsilon(1e-10));
  CHECK(fit.n_obs == 30);
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  for (double e : fit.residuals) CHECK(std::fabs(e) <= 1e-14);
  CHECK(fit.ivol <= 1e-13);
}

TEST_CASE("constant response gives alpha = c, zero betas, zero ivol") {
  const YearMonth month{2021, 4};
  FactorTable f = month_factors(month, 30, 12);
  std::vector<std::pair<Date, double>> y;
  for (const auto& row : f.rows) y.emplace_back(row.date, 0.0042);

  RiskFit fit = fit_model("btc", month, y, f, RiskModel::ThreeFactor);
  CHECK(fit.alpha == doctest::Approx(0.0042).epsilon(1e-12));
  CHECK(std::fabs(fit.beta_mrkt) <= 1e-10);
  CHECK(std::fabs(fit.beta_smb) <= 1e-10);
  CHECK(std::fabs(fit.beta_wml) <= 1e-10);
  CHECK(fit.ivol <= 1e-13);
}

TEST_CASE("residuals are orthogonal to the regressors and sum to zero") {
  const YearMonth month{2021, 4};
  FactorTable f = month_factors(month, 30, 13);
  Rng noise(14);
  auto y = linear_response(f, 0.0, 0.8, 0.3, -0.2);
  for (auto& [d, v] : y) v += 0.02 * noise.normal();

  RiskFit fit = fit_model("btc", month, y, f, RiskModel::ThreeFactor);
  double sum = 0, dot_m = 0, dot_s = 0, dot_w = 0;
  for (size_t i = 0; i < fit.residuals.size(); ++i) {
    sum += fit.residuals[i];
    dot_m += fit.residuals[i] * f.rows[i].mrkt;
    dot_s += fit.residuals[i] * f.rows[i].smb;
    dot_w += fit.residuals[i] * f.rows[i].wml;
  }
  const double scale = 1e-10 * fit.n_obs;
  CHECK(std::fabs(sum) <= scale);
  CHECK(std::fabs(dot_m) <= scale);
  CHECK(std::fabs(dot_s) <= scale);
  CHECK(std::fabs(dot_w) <= scale);
}

TEST_CASE("sampled ivol lands in the chi-square band at the right rate") {
  const YearMonth month{2021, 4};
  FactorTable f = month_factors(month, 30, 15);
  Rng noise(16);
  int inside = 0;
  const int reps = 300;
  for (int r = 0; r < reps; ++r) {
    std::vector<std::pair<Date, double>> y;
    for (const auto& row : f.rows) {
      y.emplace_back(row.date, 0.02 * noise.normal());
    }
    RiskFit fit = fit_model("btc", month, y, f, RiskModel::Capm);
    if (fit.ivol >= 0.0142 && fit.ivol <= 0.0258) ++inside;
  }
  const double frac = static_cast<double>(inside) / reps;
  CHECK(frac > 0.90);
  CHECK(frac < 1.0);
}

TEST_CASE("adding a constant to excess returns only moves the intercept") {
  const YearMonth month{2021, 4};
  FactorTable f = month_factors(month, 30, 17);
  Rng noise(18);
  auto y = linear_response(f, 0.001, 1.1);
  for (auto& [d, v] : y) v += 0.02 * noise.normal();
  auto y_shift = y;
  for (auto& [d, v] : y_shift) v += 0.005;

  RiskFit a = fit_model("btc", month, y, f, RiskModel::Capm);
  RiskFit b = fit_model("btc", month, y_shift, f, RiskModel::Capm);
  CHECK(b.alpha - a.alpha == doctest::Approx(0.005).epsilon(1e-9));
  CHECK(b.beta_mrkt == doctest::Approx(a.beta_mrkt).epsilon(1e-10));
  for (size_t i = 0; i < a.residuals.size(); ++i) {
    CHECK(std::fabs(a.residuals[i] - b.residuals[i]) <= 1e-12);
  }
  CHECK(b.ivol == doctest::Approx(a.ivol).epsilon(1e-10));
}

TEST_CASE("three-factor RSS never exceeds CAPM RSS on the same sample") {
  const YearMonth month{2021, 4};
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    FactorTable f = month_factors(month, 28, seed);
    Rng noise(seed + 1000);
    auto y = linear_response(f, 0.0005, 0.9, 0.2, 0.1);
    for (auto& [d, v] : y) v += 0.015 * noise.normal();

    RiskFit capm = fit_model("x", month, y, f, RiskModel::Capm);
    RiskFit ff3 = fit_model("x", month, y, f, RiskModel::ThreeFactor);
    CHECK(ff3.rss <= capm.rss * (1.0 + 1e-12));
  }
}

TEST_CASE("too few observations and singular designs are rejected") {
  const YearMonth month{2021, 4};
  FactorTable f = month_factors(month, 5, 19);
  auto y = linear_response(f, 0.0, 1.0);
  CHECK_THROWS_AS(fit_model("x", month, y, f, RiskModel::Capm),
                  EstimationError);

  // Constant SMB column within the month: three-factor design is singular.
  FactorTable g = month_factors(month, 30, 20);
  for (auto& row : g.rows) row.smb = 0.004;
  auto y2 = linear_response(g, 0.0, 1.0);
  try {
    fit_model("x", month, y2, g, RiskModel::ThreeFactor);
    FAIL("expected EstimationError");
  } catch (const EstimationError& e) {
    CHECK(e.code() == Errc::singular_design);
  }
}

TEST_CASE("ivol_panel keeps qualifying months and logs the rest") {
  FactorTable f;
  Rng rng(21);
  // 31 days in March, 5 days in April.
  for (int i = 0; i < 31; ++i) {
    f.rows.push_back(
        FactorDay{make_date(2021, 3, 1) + i, 0.02 * rng.normal(), 0.0, 0.0, 0.0});
  }
  for (int i = 0; i < 5; ++i) {
    f.rows.push_back(
        FactorDay{make_date(2021, 4, 1) + i, 0.02 * rng.normal(), 0.0, 0.0, 0.0});
  }

  ReturnTable returns;
  std::vector<ReturnObs> obs;
  for (const auto& row : f.rows) {
    const double r = 0.001 + 1.1 * row.mrkt;
    obs.push_back(ReturnObs{row.date, row.date - 1, r, r});
  }
  returns["btc"] = obs;

  StageLog log;
  auto fits = ivol_panel(returns, f, {"btc"}, RiskModel::Capm, {}, &log);
  REQUIRE(fits.size() == 1);
  CHECK(fits[0].month == YearMonth{2021, 3});
  CHECK(fits[0].n_obs == 31);
  CHECK(log.count(Errc::too_few_observations) == 1);
}

TEST_CASE("ivol_panel is deterministic and thread-count invariant") {
  FactorTable f;
  Rng rng(22);
  for (int m = 0; m < 3; ++m) {
    for (int i = 0; i < 28; ++i) {
      f.rows.push_back(FactorDay{make_date(2021, 1 + m, 1) + i,
                                 0.02 * rng.normal(), 0.01 * rng.normal(),
                                 0.01 * rng.normal(), 0.0});
    }
  }
  ReturnTable returns;
  std::set<std::string> coins;
  Rng noise(23);
  for (int c = 0; c < 6; ++c) {
    const std::string id = "c" + std::to_string(c);
    coins.insert(id);
    std::vector<ReturnObs> obs;
    for (const auto& row : f.rows) {
      const double r = 0.9 * row.mrkt + 0.02 * noise.normal();
      obs.push_back(ReturnObs{row.date, row.date - 1, r, r});
    }
    returns[id] = obs;
  }

  auto a = ivol_panel(returns, f, coins, RiskModel::ThreeFactor, {}, nullptr, 1);
  auto b = ivol_panel(returns, f, coins, RiskModel::ThreeFactor, {}, nullptr, 1);
  auto c = ivol_panel(returns, f, coins, RiskModel::ThreeFactor, {}, nullptr, 4);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() == c.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].coin_id == b[i].coin_id);
    CHECK(a[i].ivol == b[i].ivol);  // bit identical
    CHECK(a[i].coin_id == c[i].coin_id);
    CHECK(a[i].ivol == c[i].ivol);
    CHECK(a[i].beta_mrkt == c[i].beta_mrkt);
  }
}

TEST_CASE("population versus sample ivol divisor") {
  const YearMonth month{2021, 4};
  FactorTable f = month_factors(month, 30, 24);
  Rng noise(25);
  auto y = linear_response(f, 0.0, 1.0);
  for (auto& [d, v] : y) v += 0.02 * noise.normal();

  FitOptions pop;
  FitOptions smp;
  smp.ivol_mode = IvolMode::Sample;
  RiskFit a = fit_model("x", month, y, f, RiskModel::Capm, pop);
  RiskFit b = fit_model("x", month, y, f, RiskModel::Capm, smp);
  // same RSS, different divisor: n = 30 vs n - k = 28
  CHECK(a.ivol == doctest::Approx(std::sqrt(a.rss / 30.0)).epsilon(1e-12));
  CHECK(b.ivol == doctest::Approx(std::sqrt(b.rss / 28.0)).epsilon(1e-12));
}

TEST_CASE("equal-weighted ivol series in percent") {
  std::vector<RiskFit> fits(3);
  fits[0].coin_id = "a";
  fits[0].month = YearMonth{2021, 3};
  fits[0].ivol = 0.02;
  fits[1].coin_id = "b";
  fits[1].month = YearMonth{2021, 3};
  fits[1].ivol = 0.04;
  fits[2].coin_id = "a";
  fits[2].month = YearMonth{2021, 5};
  fits[2].ivol = 0.05;

  auto series = ew_ivol_series(fits);
  REQUIRE(series.size() == 2);  // April omitted: no fits
  CHECK(series[0].first == YearMonth{2021, 3});
  CHECK(series[0].second == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(series[1].first == YearMonth{2021, 5});
  CHECK(series[1].second == doctest::Approx(5.0).epsilon(1e-12));
}
