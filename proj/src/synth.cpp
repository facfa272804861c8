#include "cryptofactor/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "cryptofactor/rng.hpp"
#include "cryptofactor/stats.hpp"

namespace cryptofactor {

namespace {

using nlohmann::json;

std::string coin_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "c%04d", i);
  return buf;
}

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

nlohmann::json synth_config_to_json(const SynthConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["n_coins"] = c.n_coins;
  j["n_days"] = c.n_days;
  j["start_date"] = to_string(c.start_date);
  j["rf_annual"] = c.rf_annual;
  j["mean_mrkt"] = c.mean_mrkt;
  j["sigma_mrkt"] = c.sigma_mrkt;
  j["sigma_smb"] = c.sigma_smb;
  j["sigma_wml"] = c.sigma_wml;
  j["beta_mu"] = c.beta_mu;
  j["beta_sd"] = c.beta_sd;
  j["smb_load_sd"] = c.smb_load_sd;
  j["wml_load_sd"] = c.wml_load_sd;
  j["alpha_sd"] = c.alpha_sd;
  j["beta"] = c.beta;
  j["smb_load"] = c.smb_load;
  j["wml_load"] = c.wml_load;
  j["alpha"] = c.alpha;
  j["link_ivol_to_followers"] = c.link_ivol_to_followers;
  j["ivol_b0"] = c.ivol_b0;
  j["ivol_b1"] = c.ivol_b1;
  j["coin_fe_sd"] = c.coin_fe_sd;
  j["month_fe_sd"] = c.month_fe_sd;
  j["ivol_lo"] = c.ivol_lo;
  j["ivol_hi"] = c.ivol_hi;
  j["idio_sigma_override"] = c.idio_sigma_override;
  j["idio_sigma"] = c.idio_sigma;
  j["follower_drift"] = c.follower_drift;
  j["follower_noise"] = c.follower_noise;
  j["follower_f0_log10_lo"] = c.follower_f0_log10_lo;
  j["follower_f0_log10_hi"] = c.follower_f0_log10_hi;
  j["mcap0_log10_lo"] = c.mcap0_log10_lo;
  j["mcap0_log10_hi"] = c.mcap0_log10_hi;
  j["turnover_ln_mu"] = c.turnover_ln_mu;
  j["turnover_ln_sd"] = c.turnover_ln_sd;
  j["token_fraction"] = c.token_fraction;
  j["stablecoin_fraction"] = c.stablecoin_fraction;
  j["subreddit_fraction"] = c.subreddit_fraction;
  return j;
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.n_coins = j.value("n_coins", c.n_coins);
    c.n_days = j.value("n_days", c.n_days);
    if (j.contains("start_date")) {
      Date d;
      if (!try_parse_date(j.at("start_date").get<std::string>(), d)) {
        throw ConfigError(Errc::invalid_config, "bad synth start_date");
      }
      c.start_date = d;
    }
    c.rf_annual = j.value("rf_annual", c.rf_annual);
    c.mean_mrkt = j.value("mean_mrkt", c.mean_mrkt);
    c.sigma_mrkt = j.value("sigma_mrkt", c.sigma_mrkt);
    c.sigma_smb = j.value("sigma_smb", c.sigma_smb);
    c.sigma_wml = j.value("sigma_wml", c.sigma_wml);
    c.beta_mu = j.value("beta_mu", c.beta_mu);
    c.beta_sd = j.value("beta_sd", c.beta_sd);
    c.smb_load_sd = j.value("smb_load_sd", c.smb_load_sd);
    c.wml_load_sd = j.value("wml_load_sd", c.wml_load_sd);
    c.alpha_sd = j.value("alpha_sd", c.alpha_sd);
    c.beta = j.value("beta", c.beta);
    c.smb_load = j.value("smb_load", c.smb_load);
    c.wml_load = j.value("wml_load", c.wml_load);
    c.alpha = j.value("alpha", c.alpha);
    c.link_ivol_to_followers =
        j.value("link_ivol_to_followers", c.link_ivol_to_followers);
    c.ivol_b0 = j.value("ivol_b0", c.ivol_b0);
    c.ivol_b1 = j.value("ivol_b1", c.ivol_b1);
    c.coin_fe_sd = j.value("coin_fe_sd", c.coin_fe_sd);
    c.month_fe_sd = j.value("month_fe_sd", c.month_fe_sd);
    c.ivol_lo = j.value("ivol_lo", c.ivol_lo);
    c.ivol_hi = j.value("ivol_hi", c.ivol_hi);
    c.idio_sigma_override = j.value("idio_sigma_override", c.idio_sigma_override);
    c.idio_sigma = j.value("idio_sigma", c.idio_sigma);
    c.follower_drift = j.value("follower_drift", c.follower_drift);
    c.follower_noise = j.value("follower_noise", c.follower_noise);
    c.follower_f0_log10_lo =
        j.value("follower_f0_log10_lo", c.follower_f0_log10_lo);
    c.follower_f0_log10_hi =
        j.value("follower_f0_log10_hi", c.follower_f0_log10_hi);
    c.mcap0_log10_lo = j.value("mcap0_log10_lo", c.mcap0_log10_lo);
    c.mcap0_log10_hi = j.value("mcap0_log10_hi", c.mcap0_log10_hi);
    c.turnover_ln_mu = j.value("turnover_ln_mu", c.turnover_ln_mu);
    c.turnover_ln_sd = j.value("turnover_ln_sd", c.turnover_ln_sd);
    c.token_fraction = j.value("token_fraction", c.token_fraction);
    c.stablecoin_fraction = j.value("stablecoin_fraction", c.stablecoin_fraction);
    c.subreddit_fraction = j.value("subreddit_fraction", c.subreddit_fraction);
  } catch (const json::exception& e) {
    throw ConfigError(Errc::invalid_config,
                      std::string("bad synth config value: ") + e.what());
  }
  return c;
}

SynthTruth generate(const SynthConfig& config,
                    const std::filesystem::path& out_dir) {
  if (config.n_coins < 2 || config.n_days < 60) {
    throw ConfigError(Errc::invalid_config,
                      "synth needs n_coins >= 2 and n_days >= 60");
  }
  auto check_size = [&](const std::vector<double>& v, const char* name) {
    if (!v.empty() && static_cast<int>(v.size()) != config.n_coins) {
      throw ConfigError(Errc::invalid_config,
                        std::string("synth vector '") + name +
                            "' must have n_coins entries");
    }
  };
  check_size(config.beta, "beta");
  check_size(config.smb_load, "smb_load");
  check_size(config.wml_load, "wml_load");
  check_size(config.alpha, "alpha");
  check_size(config.idio_sigma, "idio_sigma");

  std::filesystem::create_directories(out_dir);

  const Date start = config.start_date;
  const Date end = start + (config.n_days - 1);

  // Month grid: one synthetic anchor month before the sample so the first
  // sample month already has an investor-base change.
  std::vector<YearMonth> months;
  for (YearMonth m = ym_of(start); m <= ym_of(end); m = next_month(m)) {
    months.push_back(m);
  }
  std::map<YearMonth, int> month_index;
  for (size_t i = 0; i < months.size(); ++i) {
    month_index[months[i]] = static_cast<int>(i);
  }

  SynthTruth truth;
  truth.config = config;
  truth.panel_b0 = config.ivol_b0;
  truth.panel_b1 = config.ivol_b1;

  // --- factor realizations ---
  Rng factor_rng = Rng::substream(config.seed, 0);
  const double rf_daily = config.rf_annual / 365.0;
  std::vector<double> mrkt(config.n_days), smb(config.n_days),
      wml(config.n_days);
  for (int d = 0; d < config.n_days; ++d) {
    mrkt[d] = config.mean_mrkt + config.sigma_mrkt * factor_rng.normal();
    smb[d] = config.sigma_smb * factor_rng.normal();
    wml[d] = config.sigma_wml * factor_rng.normal();
    truth.true_factors.rows.push_back(
        FactorDay{start + d, mrkt[d], smb[d], wml[d], rf_daily});
  }

  // --- month effects ---
  Rng month_rng = Rng::substream(config.seed, 1);
  std::vector<double> month_effect(months.size());
  for (size_t m = 0; m < months.size(); ++m) {
    month_effect[m] = config.month_fe_sd * month_rng.normal();
    truth.month_effects[to_string(months[m])] = month_effect[m];
  }

  // --- coins ---
  std::ofstream prices(out_dir / "prices.csv", std::ios::binary);
  std::ofstream meta(out_dir / "meta.csv", std::ios::binary);
  std::ofstream followers(out_dir / "followers.csv", std::ios::binary);
  std::ofstream riskfree(out_dir / "riskfree.csv", std::ios::binary);
  if (!prices || !meta || !followers || !riskfree) {
    throw DataError(Errc::missing_artifact,
                    "cannot write synthetic files under " + out_dir.string());
  }
  prices << "# generator seed: " << config.seed << "\n";
  prices << "date,coin_id,close_usd,volume_usd,market_cap_usd\n";
  meta << "coin_id,category,subreddit,is_stablecoin\n";
  followers << "date,coin_id,followers\n";
  riskfree << "date,annual_rate\n";

  for (Date d = start; d <= end; d = d + 7) {
    riskfree << to_string(d) << "," << num17(config.rf_annual) << "\n";
  }

  for (int i = 0; i < config.n_coins; ++i) {
    const std::string id = coin_name(i);
    Rng attr = Rng::substream(config.seed, 100 + static_cast<uint64_t>(i));

    CoinTruth coin;
    coin.coin_id = id;
    coin.beta = config.beta.empty() ? config.beta_mu + config.beta_sd * attr.normal()
                                    : config.beta[i];
    coin.smb_load = config.smb_load.empty() ? config.smb_load_sd * attr.normal()
                                            : config.smb_load[i];
    coin.wml_load = config.wml_load.empty() ? config.wml_load_sd * attr.normal()
                                            : config.wml_load[i];
    coin.alpha = config.alpha.empty() ? config.alpha_sd * attr.normal()
                                      : config.alpha[i];
    coin.coin_effect = config.coin_fe_sd * attr.normal();
    coin.mcap0 =
        std::pow(10.0, attr.uniform(config.mcap0_log10_lo, config.mcap0_log10_hi));
    const double price0 = std::pow(10.0, attr.uniform(-2.0, 3.0));
    const double turnover =
        std::exp(attr.normal(config.turnover_ln_mu, config.turnover_ln_sd));
    coin.is_token = attr.uniform01() < config.token_fraction;
    coin.is_stablecoin = attr.uniform01() < config.stablecoin_fraction;
    coin.has_subreddit = attr.uniform01() < config.subreddit_fraction;
    coin.f0 = std::lround(std::pow(
        10.0, attr.uniform(config.follower_f0_log10_lo,
                           config.follower_f0_log10_hi)));

    // Followers: month-end anchors from a geometric drift + integer noise,
    // plus weekly interpolated observations.
    Rng fol_rng = Rng::substream(config.seed, 10000 + static_cast<uint64_t>(i));
    std::vector<long> month_end(months.size());
    std::vector<double> dib(months.size(), 0.0);
    long prev_f = coin.f0;
    for (size_t m = 0; m < months.size(); ++m) {
      const double next =
          static_cast<double>(prev_f) * (1.0 + config.follower_drift) +
          config.follower_noise * fol_rng.normal();
      month_end[m] = std::max(0L, std::lround(next));
      dib[m] = static_cast<double>(month_end[m] - prev_f);
      prev_f = month_end[m];
    }

    // Idiosyncratic sigma per month.
    std::vector<double> sigma(months.size());
    for (size_t m = 0; m < months.size(); ++m) {
      double s;
      if (!config.idio_sigma.empty()) {
        s = config.idio_sigma[i];
      } else if (config.idio_sigma_override >= 0) {
        s = config.idio_sigma_override;
      } else if (config.link_ivol_to_followers) {
        const double lag_dib = m == 0 ? 0.0 : dib[m - 1];
        s = std::clamp(config.ivol_b0 + config.ivol_b1 * lag_dib +
                           coin.coin_effect + month_effect[m],
                       config.ivol_lo, config.ivol_hi);
      } else {
        s = config.ivol_b0;
      }
      sigma[m] = s;
      truth.sigma[id][to_string(months[m])] = s;
    }

    // Daily returns and integrated prices.
    Rng eps_rng = Rng::substream(config.seed, 20000 + static_cast<uint64_t>(i));
    double price = price0;
    const double supply = coin.mcap0 / price0;
    for (int d = 0; d < config.n_days; ++d) {
      const Date date = start + d;
      if (d > 0) {
        double r;
        if (coin.is_stablecoin) {
          r = 0.0005 * eps_rng.normal();
        } else {
          const int m = month_index[ym_of(date)];
          r = rf_daily + coin.alpha + coin.beta * mrkt[d] +
              coin.smb_load * smb[d] + coin.wml_load * wml[d] +
              sigma[m] * eps_rng.normal();
        }
        if (r <= -0.99) {
          r = -0.99;
          ++truth.return_clamps;
        }
        price *= 1.0 + r;
      }
      const double mcap = supply * price;
      const double volume = turnover * mcap;
      prices << to_string(date) << "," << id << "," << num17(price) << ","
             << num17(volume) << "," << num17(mcap) << "\n";
    }

    // Follower rows: month-end anchors plus weekly interpolated points.
    // The pre-sample anchor makes the first sample month's change defined.
    {
      std::vector<std::pair<Date, long>> anchors;
      anchors.emplace_back(start - 1, coin.f0);
      for (size_t m = 0; m < months.size(); ++m) {
        anchors.emplace_back(std::min(month_last(months[m]), end), month_end[m]);
      }
      std::map<Date, long> rows;
      for (const auto& [d, v] : anchors) rows[d] = v;
      for (Date d = start; d <= end; d = d + 7) {
        auto hi = std::lower_bound(
            anchors.begin(), anchors.end(), d,
            [](const auto& a, Date date) { return a.first < date; });
        if (hi == anchors.end() || hi->first == d) continue;
        const auto& lo = *(hi - 1);
        const double frac = static_cast<double>(d - lo.first) /
                            static_cast<double>(hi->first - lo.first);
        const double v = static_cast<double>(lo.second) +
                         frac * static_cast<double>(hi->second - lo.second);
        rows.emplace(d, std::max(0L, std::lround(v)));
      }
      if (coin.has_subreddit) {
        for (const auto& [d, v] : rows) {
          followers << to_string(d) << "," << id << "," << v << "\n";
        }
      }
    }

    meta << id << "," << (coin.is_token ? "token" : "coin") << ","
         << (coin.has_subreddit ? "r_" + id : "") << ","
         << (coin.is_stablecoin ? "true" : "false") << "\n";

    truth.coins.push_back(std::move(coin));
  }

  // --- sidecar ---
  json j;
  j["config"] = synth_config_to_json(config);
  j["panel_truth"] = {{"b0", truth.panel_b0},
                      {"b1", truth.panel_b1},
                      {"dib_units", "raw followers"}};
  j["return_clamps"] = truth.return_clamps;
  {
    json coins = json::array();
    for (const auto& c : truth.coins) {
      coins.push_back({{"coin_id", c.coin_id},
                       {"beta", c.beta},
                       {"smb_load", c.smb_load},
                       {"wml_load", c.wml_load},
                       {"alpha", c.alpha},
                       {"coin_effect", c.coin_effect},
                       {"mcap0", c.mcap0},
                       {"f0", c.f0},
                       {"is_token", c.is_token},
                       {"is_stablecoin", c.is_stablecoin},
                       {"has_subreddit", c.has_subreddit}});
    }
    j["coins"] = std::move(coins);
  }
  {
    json f;
    json dates = json::array(), jm = json::array(), js = json::array(),
         jw = json::array();
    for (const auto& row : truth.true_factors.rows) {
      dates.push_back(to_string(row.date));
      jm.push_back(row.mrkt);
      js.push_back(row.smb);
      jw.push_back(row.wml);
    }
    f["dates"] = std::move(dates);
    f["mrkt"] = std::move(jm);
    f["smb"] = std::move(js);
    f["wml"] = std::move(jw);
    f["rf_daily"] = rf_daily;
    j["factors_true"] = std::move(f);
  }
  j["month_effects"] = truth.month_effects;
  j["sigma"] = truth.sigma;

  std::ofstream truth_out(out_dir / "truth.json", std::ios::binary);
  truth_out << j.dump(1) << "\n";

  return truth;
}

SynthTruth load_truth(const std::filesystem::path& truth_json) {
  std::ifstream in(truth_json, std::ios::binary);
  if (!in) {
    throw ConfigError(Errc::missing_artifact,
                      "cannot open truth file: " + truth_json.string());
  }
  json j = json::parse(in);

  SynthTruth truth;
  truth.config = synth_config_from_json(j.at("config"));
  truth.panel_b0 = j.at("panel_truth").at("b0").get<double>();
  truth.panel_b1 = j.at("panel_truth").at("b1").get<double>();
  truth.return_clamps = j.at("return_clamps").get<int>();
  for (const auto& c : j.at("coins")) {
    CoinTruth coin;
    coin.coin_id = c.at("coin_id").get<std::string>();
    coin.beta = c.at("beta").get<double>();
    coin.smb_load = c.at("smb_load").get<double>();
    coin.wml_load = c.at("wml_load").get<double>();
    coin.alpha = c.at("alpha").get<double>();
    coin.coin_effect = c.at("coin_effect").get<double>();
    coin.mcap0 = c.at("mcap0").get<double>();
    coin.f0 = c.at("f0").get<long>();
    coin.is_token = c.at("is_token").get<bool>();
    coin.is_stablecoin = c.at("is_stablecoin").get<bool>();
    coin.has_subreddit = c.at("has_subreddit").get<bool>();
    truth.coins.push_back(std::move(coin));
  }
  const auto& f = j.at("factors_true");
  const auto dates = f.at("dates").get<std::vector<std::string>>();
  const auto jm = f.at("mrkt").get<std::vector<double>>();
  const auto js = f.at("smb").get<std::vector<double>>();
  const auto jw = f.at("wml").get<std::vector<double>>();
  const double rf_daily = f.at("rf_daily").get<double>();
  for (size_t i = 0; i < dates.size(); ++i) {
    Date d;
    if (!try_parse_date(dates[i], d)) {
      throw ConfigError(Errc::invalid_config, "bad date in truth factors");
    }
    truth.true_factors.rows.push_back(FactorDay{d, jm[i], js[i], jw[i], rf_daily});
  }
  truth.month_effects =
      j.at("month_effects").get<std::map<std::string, double>>();
  truth.sigma =
      j.at("sigma").get<std::map<std::string, std::map<std::string, double>>>();
  return truth;
}

FeFit oracle_fe(const PanelTable& panel, const FeSpec& spec) {
  PanelIndex idx = index_panel(panel, spec.fe_unit, spec.fe_time);
  const int n = static_cast<int>(idx.rows.size());
  if (n > 50000) {
    throw ConfigError(Errc::invalid_config,
                      "oracle_fe dummy expansion capped at 50000 rows");
  }
  if ((spec.fe_unit && idx.n_units < 2) || (spec.fe_time && idx.n_times < 2) ||
      n < 3) {
    throw EstimationError(Errc::too_few_groups,
                          "need at least 2 units and 2 periods after "
                          "dropping singletons");
  }

  const int k_req = static_cast<int>(spec.regressors.size());
  const auto& y_full = panel.col(spec.dependent);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = y_full[idx.rows[i]];

  // Absorbed detection mirrors the within estimator exactly.
  std::vector<Eigen::VectorXd> probe(k_req);
  std::vector<double> raw_scale(k_req, 0.0);
  for (int j = 0; j < k_req; ++j) {
    const auto& c = panel.col(spec.regressors[j]);
    probe[j].resize(n);
    for (int i = 0; i < n; ++i) {
      probe[j][i] = c[idx.rows[i]];
      raw_scale[j] = std::max(raw_scale[j], std::fabs(probe[j][i]));
    }
  }
  std::vector<Eigen::VectorXd> demeaned = probe;
  demean_two_way(demeaned, idx, spec.fe_unit, spec.fe_time);
  std::vector<int> active;
  std::vector<char> absorbed(k_req, 0);
  for (int j = 0; j < k_req; ++j) {
    if (demeaned[j].cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, raw_scale[j])) {
      absorbed[j] = 1;
    } else {
      active.push_back(j);
    }
  }
  if (active.empty()) {
    throw EstimationError(Errc::absorbed,
                          "all regressors are absorbed by the fixed effects");
  }

  const int k = static_cast<int>(active.size());
  const int dummy_units = spec.fe_unit ? idx.n_units - 1 : 0;
  const int dummy_times = spec.fe_time ? idx.n_times - 1 : 0;
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, 1 + k + dummy_units + dummy_times);
  X.col(0).setOnes();
  for (int j = 0; j < k; ++j) X.col(1 + j) = probe[active[j]];
  for (int i = 0; i < n; ++i) {
    if (spec.fe_unit && idx.unit_id[i] > 0) {
      X(i, 1 + k + idx.unit_id[i] - 1) = 1.0;
    }
    if (spec.fe_time && idx.time_id[i] > 0) {
      X(i, 1 + k + dummy_units + idx.time_id[i] - 1) = 1.0;
    }
  }

  OlsFit raw = ols(X, y, /*add_intercept=*/false);

  FeFit fit;
  fit.se_type = SeType::Homoskedastic;
  fit.n_rows = n;
  fit.n_units = idx.n_units;
  fit.n_times = idx.n_times;
  fit.dropped_singletons = idx.dropped_rows;
  fit.dof = raw.n - raw.k;

  fit.coefs.resize(k_req);
  for (int j = 0; j < k_req; ++j) {
    fit.coefs[j].name = spec.regressors[j];
    fit.coefs[j].absorbed = absorbed[j] != 0;
  }
  for (int j = 0; j < k; ++j) {
    FeCoef& c = fit.coefs[active[j]];
    c.beta = raw.coef[1 + j];
    c.se_homo = raw.se[1 + j];
    c.se = c.se_homo;
    c.t = raw.t[1 + j];
    c.p = stats::two_sided_p(c.t);
  }

  // Within R^2 against the double-demeaned dependent variable.
  std::vector<Eigen::VectorXd> ycol{y};
  demean_two_way(ycol, idx, spec.fe_unit, spec.fe_time);
  const double mean = ycol[0].mean();
  const double tss = (ycol[0].array() - mean).matrix().squaredNorm();
  fit.within_r2 = tss > 0 ? std::clamp(1.0 - raw.rss / tss, 0.0, 1.0) : 1.0;
  return fit;
}

}  // namespace cryptofactor
