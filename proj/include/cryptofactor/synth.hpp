#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cryptofactor/calendar.hpp"
#include "cryptofactor/econometrics.hpp"
#include "cryptofactor/factors.hpp"

namespace cryptofactor {

// Everything the generator needs; same config => byte-identical files.
struct SynthConfig {
  uint64_t seed = 1;
  int n_coins = 50;
  int n_days = 1460;
  Date start_date = make_date(2018, 1, 1);

  double rf_annual = 0.02;

  // Daily factor realizations.
  double mean_mrkt = 0.0005;
  double sigma_mrkt = 0.02;
  double sigma_smb = 0.01;
  double sigma_wml = 0.01;

  // Per-coin loading law; explicit vectors (size n_coins) override sampling.
  double beta_mu = 1.0;
  double beta_sd = 0.3;
  double smb_load_sd = 0.5;
  double wml_load_sd = 0.5;
  double alpha_sd = 0.0;
  std::vector<double> beta, smb_load, wml_load, alpha;

  // Idiosyncratic volatility process. When linked to followers:
  //   sigma(i,m) = clamp(ivol_b0 + ivol_b1 * dib(i,m-1) + a_i + d_m, lo, hi)
  // Otherwise constant per coin (idio_sigma vector or the override).
  bool link_ivol_to_followers = true;
  double ivol_b0 = 0.02;
  double ivol_b1 = 2e-6;  // per raw follower
  double coin_fe_sd = 0.002;
  double month_fe_sd = 0.002;
  double ivol_lo = 0.002;
  double ivol_hi = 0.30;
  double idio_sigma_override = -1.0;  // >= 0 wins over the linked process
  std::vector<double> idio_sigma;

  // Follower process: monthly geometric drift plus integer noise, floor 0.
  double follower_drift = 0.01;
  double follower_noise = 200.0;
  double follower_f0_log10_lo = 3.5;
  double follower_f0_log10_hi = 5.0;

  // Market cap / volume processes.
  double mcap0_log10_lo = 7.5;
  double mcap0_log10_hi = 10.5;
  double turnover_ln_mu = -3.0;
  double turnover_ln_sd = 0.5;

  double token_fraction = 0.5;
  double stablecoin_fraction = 0.04;
  double subreddit_fraction = 0.9;
};

struct CoinTruth {
  std::string coin_id;
  double beta = 0, smb_load = 0, wml_load = 0, alpha = 0;
  double coin_effect = 0;
  double mcap0 = 0;
  long f0 = 0;
  bool is_token = false;
  bool is_stablecoin = false;
  bool has_subreddit = true;
};

struct SynthTruth {
  SynthConfig config;
  std::vector<CoinTruth> coins;
  FactorTable true_factors;  // the generating realizations
  std::map<std::string, std::map<std::string, double>> sigma;  // coin -> YM -> sigma
  std::map<std::string, double> month_effects;                 // YM -> d_m
  double panel_b0 = 0;
  double panel_b1 = 0;
  int return_clamps = 0;
};

// JSON round trip shared by the pipeline config file and the truth sidecar.
// Missing keys fall back to defaults on the way in.
nlohmann::json synth_config_to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j);

// Writes prices.csv, meta.csv, followers.csv, riskfree.csv and truth.json
// into out_dir; returns the in-memory truth. Throws InvalidConfig.
SynthTruth generate(const SynthConfig& config,
                    const std::filesystem::path& out_dir);

SynthTruth load_truth(const std::filesystem::path& truth_json);

// Brute-force fixed-effects reference: explicit coin/month dummy matrix fed
// to plain OLS. Homoskedastic errors only. Refuses panels beyond 50,000
// rows. Singleton groups are dropped exactly as in two_way_fe.
FeFit oracle_fe(const PanelTable& panel, const FeSpec& spec);

}  // namespace cryptofactor
